//! Degenerations of the divisor map.
//!
//! Three scenarios are tracked step by step: `A -> infinity` at fixed `p`,
//! `p -> omega_k/2` along a calibrated `A(p)`, and `B -> infinity` for the
//! H family. Each step records the divisor, its matching distance to the
//! predicted limit configuration and the log-derivative identity residual.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::addition::{sigma_of, SigmaValue};
use crate::divisor::{divisor_of, Divisor};
use crate::elliptic::Torus;
use crate::error::{Error, Result};
use crate::even_solution::{solve_even, spec_at};
use crate::matching::matched_distance;
use crate::potential::{log_derivative_residual, MultiIndex, PotentialSpec};

/// Direction of approach `delta / |delta|` for p-limits.
pub const DELTA_DIRECTION: Complex64 = Complex64::new(0.8, 0.6);

/// Probe points (cell coordinates) for the log-derivative residual.
const PROBES: [(f64, f64); 4] = [(0.31, 0.17), (0.63, 0.41), (0.22, 0.74), (0.81, 0.88)];
const PROBE_CLEARANCE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Branch> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            _ => Err(Error::InvalidInput(format!("branch must be + or -, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    AToInfinity,
    PToHalfPeriod { k: usize },
    /// `p -> omega_k/2` with `A` held fixed.
    PToHalfPeriodUncalibrated { k: usize },
    BToInfinityH,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitStep {
    /// Schedule value: `A`, `|delta|` or `B`.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub p: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub a: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub b: Option<Complex64>,
    /// `B + A eta_k`, the constant term seen from the limiting H equation.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub b_eff: Option<Complex64>,
    /// W-sign passed to the divisor extraction.
    pub w_sign: i32,
    #[serde(with = "crate::report::complex_vec")]
    pub points: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub c: Option<Complex64>,
    pub sigma: Option<SigmaValue>,
    /// Matching distance to the predicted limit configuration.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub distance: Option<f64>,
    /// Torus distance of `sigma` to its predicted limit.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub sigma_distance: Option<f64>,
    /// `f * C^2 / (4B)` for the H large-B limit.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub ratio: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub identity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LimitStep {
    fn empty(value: f64) -> LimitStep {
        LimitStep {
            value,
            p: None,
            a: None,
            b: None,
            b_eff: None,
            w_sign: 1,
            points: Vec::new(),
            c: None,
            sigma: None,
            distance: None,
            sigma_distance: None,
            ratio: None,
            identity_residual: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitScenario {
    pub scenario: ScenarioKind,
    #[serde(with = "crate::report::complex")]
    pub tau: Complex64,
    pub n: [u32; 4],
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub p: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_branch: Option<Branch>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::complex_opt")]
    pub b_target: Option<Complex64>,
    pub schedule: Vec<f64>,
    /// Predicted limit configuration in `Sym^N E_tau`.
    #[serde(with = "crate::report::complex_vec")]
    pub predicted: Vec<Complex64>,
    pub records: Vec<LimitStep>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub final_distance: Option<f64>,
    /// Distances strictly decrease over the last three steps.
    pub monotone_tail: bool,
    /// Log-log slope of `|B_eff - B_target|` against `|delta|`.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub b_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub max_identity_residual: Option<f64>,
}

impl LimitScenario {
    fn finish(mut self) -> LimitScenario {
        let d: Vec<Option<f64>> = self.records.iter().map(|r| r.distance).collect();
        self.final_distance = d.last().copied().flatten();
        let tail = &d[d.len().saturating_sub(3)..];
        self.monotone_tail = tail.len() >= 2
            && tail.iter().all(|x| x.is_some())
            && tail.windows(2).all(|w| w[1].unwrap() < w[0].unwrap());
        self.max_identity_residual = self
            .records
            .iter()
            .filter_map(|r| r.identity_residual)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        self
    }
}

fn check_schedule(schedule: &[f64], increasing: bool) -> Result<()> {
    if schedule.is_empty() || schedule.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::InvalidInput("schedule must be a nonempty list of positive numbers".into()));
    }
    let ok = schedule
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !ok {
        let dir = if increasing { "increasing" } else { "decreasing" };
        return Err(Error::InvalidInput(format!("schedule must be strictly {dir}")));
    }
    Ok(())
}

fn torus_distance(t: &Torus, a: Complex64, b: Complex64) -> f64 {
    t.distance(a, b)
}

/// Max residual of the log-derivative identity over probe points clear of
/// the divisor and the singularities.
fn identity_residual(spec: &PotentialSpec, d: &Divisor) -> Result<f64> {
    let t = &spec.torus;
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for &(x, y) in &PROBES {
        let z = t.from_coords(x, y);
        let clear = spec.singular_distance(z) > PROBE_CLEARANCE
            && d.points.iter().all(|&a| t.distance(z, a) > PROBE_CLEARANCE);
        if clear {
            worst = worst.max(log_derivative_residual(spec, &d.points, d.c, z)?);
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InvalidInput("no probe point clears the divisor".into()));
    }
    Ok(worst)
}

/// The H or GLE configuration `(0^{n_0}, (omega_1/2)^{n_1}, ...)`.
fn half_period_configuration(t: &Torus, n: &MultiIndex) -> Vec<Complex64> {
    let mut out = Vec::new();
    for k in 0..4 {
        for _ in 0..n.n[k] {
            out.push(t.half_period(k));
        }
    }
    out
}

/// `infinity_{+-}(p)`: the half-period configuration plus `+-p`.
pub fn infinity_pm(t: &Torus, n: &MultiIndex, p: Complex64, sign: f64) -> Vec<Complex64> {
    let mut pts = half_period_configuration(t, n);
    pts.push(p * sign);
    pts
}

/// `infinity_0` for the H family.
pub fn infinity_zero(t: &Torus, n: &MultiIndex) -> Vec<Complex64> {
    half_period_configuration(t, n)
}

/// Limit of `A -> infinity` as `p -> omega_k/2`: the half-period
/// configuration with the extra point at `omega_k/2`.
pub fn infinity_at_half_period(t: &Torus, n: &MultiIndex, k: usize) -> Vec<Complex64> {
    let mut pts = half_period_configuration(t, n);
    pts.push(t.half_period(k));
    pts
}

/// `alpha_0` for the branch: `-(1/4 + n_k)` or `3/4 + n_k`.
pub fn alpha0(n: &MultiIndex, k: usize, branch: Branch) -> f64 {
    let nk = n.n[k] as f64;
    match branch {
        Branch::Plus => -(0.25 + nk),
        Branch::Minus => 0.75 + nk,
    }
}

/// `sum_{i != k} n_i (n_i + 1) wp(omega_i/2 + omega_k/2)`.
pub fn half_period_shift_sum(t: &Torus, n: &MultiIndex, k: usize) -> Complex64 {
    (0..4)
        .filter(|&i| i != k)
        .map(|i| t.e_k(i ^ k) * (n.n[i] * (n.n[i] + 1)) as f64)
        .sum()
}

/// `alpha_1` producing the limit constant `b_target` on the branch.
pub fn alpha1(t: &Torus, n: &MultiIndex, k: usize, branch: Branch, b_target: Complex64) -> Complex64 {
    let s = half_period_shift_sum(t, n, k);
    -branch.sign() * (b_target + s) / (2.0 * n.n[k] as f64 + 1.0)
}

/// `A = alpha_0 / delta + alpha_1 delta` with `delta = p - omega_k/2`.
pub fn calibrated_a(
    t: &Torus,
    n: &MultiIndex,
    k: usize,
    branch: Branch,
    b_target: Complex64,
    delta: Complex64,
) -> Complex64 {
    alpha0(n, k, branch) / delta + alpha1(t, n, k, branch, b_target) * delta
}

/// W-sign whose divisor tends to `infinity_+(p)`: the one with `c/A` nearer
/// to `-1`.
fn plus_sign_by_c(t: &Arc<Torus>, n: MultiIndex, p: Complex64, a: Complex64) -> Result<i32> {
    let spec = spec_at(t, n, Some(p), a)?;
    let sol = solve_even(&spec)?;
    let c_plus = divisor_of(&sol, 1)?.c;
    let c_minus = divisor_of(&sol, -1)?.c;
    let one = Complex64::new(1.0, 0.0);
    Ok(if (c_plus / a + one).norm() <= (c_minus / a + one).norm() {
        1
    } else {
        -1
    })
}

struct StepInput<'a> {
    spec: &'a PotentialSpec,
    sign: i32,
    predicted: &'a [Complex64],
    sigma_limit: Option<Complex64>,
}

fn fill_step(step: &mut LimitStep, input: StepInput) -> Result<()> {
    let t = &input.spec.torus;
    let sol = solve_even(input.spec)?;
    let d = divisor_of(&sol, input.sign)?;
    let s = sigma_of(&d, input.spec)?;
    step.w_sign = input.sign;
    step.points = d.points.clone();
    step.c = Some(d.c);
    step.distance = Some(matched_distance(t, &d.points, input.predicted));
    step.sigma_distance = input.sigma_limit.map(|l| torus_distance(t, s.point, l));
    step.identity_residual = Some(identity_residual(input.spec, &d)?);
    step.sigma = Some(s);
    Ok(())
}

/// `A -> infinity` at fixed `p` along the real values of `schedule`.
/// `sign = +1` follows the branch tending to `infinity_+(p)`.
pub fn run_a_limit(t: &Arc<Torus>, n: MultiIndex, p: Complex64, schedule: &[f64], sign: i32) -> Result<LimitScenario> {
    crate::potential::check_p(t, p)?;
    check_schedule(schedule, true)?;
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    let predicted = infinity_pm(t, &n, p, s);
    let mut records = Vec::new();
    for &v in schedule {
        let a = Complex64::new(v, 0.0);
        let mut step = LimitStep::empty(v);
        step.p = Some(p);
        step.a = Some(a);
        let run = |step: &mut LimitStep| -> Result<()> {
            let spec = spec_at(t, n, Some(p), a)?;
            step.b = Some(spec.b());
            let plus = plus_sign_by_c(t, n, p, a)?;
            let w = if s > 0.0 { plus } else { -plus };
            fill_step(
                step,
                StepInput {
                    spec: &spec,
                    sign: w,
                    predicted: &predicted,
                    sigma_limit: Some(p * s),
                },
            )
        };
        if let Err(e) = run(&mut step) {
            step.error = Some(e.to_string());
        }
        records.push(step);
    }
    Ok(LimitScenario {
        scenario: ScenarioKind::AToInfinity,
        tau: t.tau,
        n: n.n,
        p: Some(p),
        target_branch: Some(if s > 0.0 { Branch::Plus } else { Branch::Minus }),
        b_target: None,
        schedule: schedule.to_vec(),
        predicted,
        records,
        final_distance: None,
        monotone_tail: false,
        b_slope: None,
        max_identity_residual: None,
    }
    .finish())
}

/// Limit index on the branch: `n` with `n_k` raised or lowered by one.
pub fn limit_index(n: &MultiIndex, k: usize, branch: Branch) -> Result<MultiIndex> {
    match branch {
        Branch::Plus => Ok(n.shift(k, true)),
        Branch::Minus if n.n[k] >= 1 => Ok(n.shift(k, false)),
        Branch::Minus => Err(Error::InvalidInput(format!(
            "the minus branch at k = {k} needs n_{k} >= 1"
        ))),
    }
}

/// Both divisors of `H(n_k^{+-}, b_target)`, padded on the minus branch with
/// the two points absorbed at `omega_k/2`.
pub fn h_limit_divisors(
    t: &Arc<Torus>,
    n: &MultiIndex,
    k: usize,
    branch: Branch,
    b_target: Complex64,
) -> Result<[Vec<Complex64>; 2]> {
    let m = limit_index(n, k, branch)?;
    let spec = PotentialSpec::h(t.clone(), m, b_target);
    let sol = solve_even(&spec)?;
    let mut out = [Vec::new(), Vec::new()];
    for (slot, sign) in out.iter_mut().zip([1, -1]) {
        let mut pts = if m.n_hat() == 0 {
            Vec::new()
        } else {
            divisor_of(&sol, sign)?.points
        };
        if branch == Branch::Minus {
            pts.push(t.half_period(k));
            pts.push(t.half_period(k));
        }
        *slot = pts;
    }
    Ok(out)
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `p -> omega_k/2` along `delta = |delta| * DELTA_DIRECTION` with the
/// calibrated `A(p)`. The GLE divisor is compared with the nearer of the two
/// divisors of the limiting H equation.
pub fn run_p_limit(
    t: &Arc<Torus>,
    n: MultiIndex,
    k: usize,
    branch: Branch,
    b_target: Complex64,
    schedule: &[f64],
) -> Result<LimitScenario> {
    if k > 3 {
        return Err(Error::InvalidInput(format!("half-period index must be 0..3, got {k}")));
    }
    check_schedule(schedule, false)?;
    let targets = h_limit_divisors(t, &n, k, branch, b_target)?;
    let mut records = Vec::new();
    for &v in schedule {
        let delta = DELTA_DIRECTION * v;
        let p = t.half_period(k) + delta;
        let a = calibrated_a(t, &n, k, branch, b_target, delta);
        let mut step = LimitStep::empty(v);
        step.p = Some(p);
        step.a = Some(a);
        let run = |step: &mut LimitStep| -> Result<()> {
            let spec = spec_at(t, n, Some(p), a)?;
            step.b = Some(spec.b());
            step.b_eff = Some(spec.b() + a * t.eta_k(k));
            let sol = solve_even(&spec)?;
            let d = divisor_of(&sol, 1)?;
            let dist = targets
                .iter()
                .map(|tg| matched_distance(t, &d.points, tg))
                .fold(f64::INFINITY, f64::min);
            let s = sigma_of(&d, &spec)?;
            step.w_sign = 1;
            step.points = d.points.clone();
            step.c = Some(d.c);
            step.distance = Some(dist);
            step.identity_residual = Some(identity_residual(&spec, &d)?);
            step.sigma = Some(s);
            Ok(())
        };
        if let Err(e) = run(&mut step) {
            step.error = Some(e.to_string());
        }
        records.push(step);
    }
    let ys: Vec<f64> = records
        .iter()
        .map(|r| r.b_eff.map_or(f64::NAN, |b| (b - b_target).norm()))
        .collect();
    let slope = loglog_slope(schedule, &ys);
    let predicted = targets[0].clone();
    let mut sc = LimitScenario {
        scenario: ScenarioKind::PToHalfPeriod { k },
        tau: t.tau,
        n: n.n,
        p: None,
        target_branch: Some(branch),
        b_target: Some(b_target),
        schedule: schedule.to_vec(),
        predicted,
        records,
        final_distance: None,
        monotone_tail: false,
        b_slope: None,
        max_identity_residual: None,
    }
    .finish();
    sc.b_slope = slope;
    Ok(sc)
}

/// `p -> omega_k/2` with `A` held fixed: `B(p)` diverges and the divisor
/// tends to the half-period configuration with the extra point at
/// `omega_k/2`.
pub fn run_p_limit_fixed_a(
    t: &Arc<Torus>,
    n: MultiIndex,
    k: usize,
    a: Complex64,
    schedule: &[f64],
) -> Result<LimitScenario> {
    if k > 3 {
        return Err(Error::InvalidInput(format!("half-period index must be 0..3, got {k}")));
    }
    check_schedule(schedule, false)?;
    let predicted = infinity_at_half_period(t, &n, k);
    let mut records = Vec::new();
    for &v in schedule {
        let p = t.half_period(k) + DELTA_DIRECTION * v;
        let mut step = LimitStep::empty(v);
        step.p = Some(p);
        step.a = Some(a);
        let run = |step: &mut LimitStep| -> Result<()> {
            let spec = spec_at(t, n, Some(p), a)?;
            step.b = Some(spec.b());
            step.b_eff = Some(spec.b() + a * t.eta_k(k));
            fill_step(
                step,
                StepInput {
                    spec: &spec,
                    sign: 1,
                    predicted: &predicted,
                    sigma_limit: None,
                },
            )
        };
        if let Err(e) = run(&mut step) {
            step.error = Some(e.to_string());
        }
        records.push(step);
    }
    Ok(LimitScenario {
        scenario: ScenarioKind::PToHalfPeriodUncalibrated { k },
        tau: t.tau,
        n: n.n,
        p: None,
        target_branch: None,
        b_target: None,
        schedule: schedule.to_vec(),
        predicted,
        records,
        final_distance: None,
        monotone_tail: false,
        b_slope: None,
        max_identity_residual: None,
    }
    .finish())
}

/// `B -> infinity` for the H family along the real values of `schedule`.
pub fn run_b_limit_h(t: &Arc<Torus>, n: MultiIndex, schedule: &[f64]) -> Result<LimitScenario> {
    if n.n_hat() == 0 {
        return Err(Error::InvalidInput("the H large-B limit needs sum n_k >= 1".into()));
    }
    check_schedule(schedule, true)?;
    let predicted = infinity_zero(t, &n);
    let weight = n.weight() as f64;
    let mut records = Vec::new();
    for &v in schedule {
        let b = Complex64::new(v, 0.0);
        let mut step = LimitStep::empty(v);
        step.b = Some(b);
        let run = |step: &mut LimitStep| -> Result<()> {
            let spec = PotentialSpec::h(t.clone(), n, b);
            fill_step(
                step,
                StepInput {
                    spec: &spec,
                    sign: 1,
                    predicted: &predicted,
                    sigma_limit: Some(Complex64::new(0.0, 0.0)),
                },
            )?;
            let f = step.sigma.as_ref().and_then(|s| s.wp_of_sigma);
            step.ratio = f.map(|f| f * weight * weight / (4.0 * b));
            Ok(())
        };
        if let Err(e) = run(&mut step) {
            step.error = Some(e.to_string());
        }
        records.push(step);
    }
    Ok(LimitScenario {
        scenario: ScenarioKind::BToInfinityH,
        tau: t.tau,
        n: n.n,
        p: None,
        target_branch: None,
        b_target: None,
        schedule: schedule.to_vec(),
        predicted,
        records,
        final_distance: None,
        monotone_tail: false,
        b_slope: None,
        max_identity_residual: None,
    }
    .finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn torus() -> Arc<Torus> {
        Arc::new(Torus::new(cx(0.2, 1.3)).unwrap())
    }

    #[test]
    fn alpha_values() {
        let t = torus();
        let n = MultiIndex::new([2, 1, 0, 0]);
        assert_eq!(alpha0(&n, 0, Branch::Plus), -2.25);
        assert_eq!(alpha0(&n, 0, Branch::Minus), 2.75);
        let s = half_period_shift_sum(&t, &n, 0);
        assert!((s - 2.0 * t.e_k(1)).norm() < 1e-14);
        for br in [Branch::Plus, Branch::Minus] {
            assert!(alpha1(&t, &n, 0, br, -s).norm() < 1e-14);
        }
        let b = cx(0.4, -0.2);
        let a1 = alpha1(&t, &n, 0, Branch::Plus, b);
        assert!((a1 + (b + s) / 5.0).norm() < 1e-14);
    }

    #[test]
    fn calibrated_b_converges() {
        let t = torus();
        let n = MultiIndex::new([1, 1, 0, 0]);
        let bt = cx(0.7, 0.3);
        for k in [0, 1, 2] {
            for br in [Branch::Plus, Branch::Minus] {
                let mut errs = Vec::new();
                for d in [1e-1, 1e-2, 1e-3] {
                    let delta = DELTA_DIRECTION * d;
                    let a = calibrated_a(&t, &n, k, br, bt, delta);
                    let b = crate::potential::b_from_a(&t, &n, t.half_period(k) + delta, a).unwrap();
                    errs.push((b + a * t.eta_k(k) - bt).norm());
                }
                assert!(errs[2] < errs[1] && errs[1] < errs[0], "k={k} {br:?} {errs:?}");
                assert!(errs[2] < 1e-3, "k={k} {br:?} {errs:?}");
            }
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schedules_must_be_monotone() {
        assert!(check_schedule(&[1.0, 10.0], true).is_ok());
        assert!(check_schedule(&[10.0, 1.0], true).is_err());
        assert!(check_schedule(&[], false).is_err());
    }
}
