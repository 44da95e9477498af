//! Seeded self-checks, one per acceptance criterion.
//!
//! Each criterion returns a [`Check`] made of named measurements with their
//! bounds. Reference values come from independent routes: lattice sums for
//! the elliptic kernel, the closed form of the Lamé `n = 1` spectral
//! polynomial, and direct sigma-product evaluation of the eigenfunction for
//! the monodromy.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::addition::{f_eval, measure_degree, verify_additivity, DegreeMethod, FamilySpec};
use crate::divisor::{
    c_rule_half_period, c_rule_p, divisor_of, epsilon_1, monodromy_rs, point_sum, recover_a, CaseTag, Divisor,
};
use crate::elliptic::Torus;
use crate::error::{Error, Result};
use crate::even_solution::{
    find_branch_points, solve_even, solve_even_with, EvenSolution, Normalization, Reducibility,
};
use crate::limits::{run_p_limit, Branch};
use crate::oracle::LatticeOracle;
use crate::potential::{log_derivative_residual, MultiIndex, PotentialSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    /// `measured <= max`.
    Below { max: f64 },
    /// `lo <= measured <= hi`.
    Range { lo: f64, hi: f64 },
    /// `measured == value` (integer counts).
    Equals { value: f64 },
}

impl Bound {
    fn holds(&self, x: f64) -> bool {
        match *self {
            Bound::Below { max } => x <= max,
            Bound::Range { lo, hi } => lo <= x && x <= hi,
            Bound::Equals { value } => x == value,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Bound::Below { max } => write!(f, "<= {max:.1e}"),
            Bound::Range { lo, hi } => write!(f, "in [{lo}, {hi}]"),
            Bound::Equals { value } => write!(f, "== {value}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Part {
    pub name: String,
    #[serde(with = "crate::report::finite")]
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub parts: Vec<Part>,
    pub passed: bool,
    /// Wall time, recorded only when timings are requested (it would
    /// otherwise break byte-identical reports).
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::report::finite_opt")]
    pub seconds: Option<f64>,
    /// Pipeline failures met while measuring; any counts as a failure.
    pub errors: usize,
    pub notes: Vec<String>,
}

impl Check {
    fn new(criterion: u8, name: &str) -> Check {
        Check {
            criterion,
            name: name.to_string(),
            parts: Vec::new(),
            passed: true,
            seconds: None,
            errors: 0,
            notes: Vec::new(),
        }
    }

    fn part(&mut self, name: impl Into<String>, measured: f64, bound: Bound) {
        let passed = bound.holds(measured);
        self.passed &= passed;
        self.parts.push(Part {
            name: name.into(),
            measured,
            bound,
            passed,
        });
    }

    fn error(&mut self, what: &str, e: &Error) {
        self.passed = false;
        self.errors += 1;
        self.notes.push(format!("{what}: {e}"));
    }

    fn timed(mut self, start: Instant, budget: f64) -> Check {
        let s = start.elapsed().as_secs_f64();
        self.seconds = Some(s);
        self.part("runtime_s", s, Bound::Below { max: budget });
        self
    }

    /// One line: `criterion N name PASS|FAIL part=value bound; ...`.
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| format!("{}={:.3e} {}{}", p.name, p.measured, p.bound, if p.passed { "" } else { " (fail)" }))
            .collect();
        let mut s = format!(
            "criterion {} {:<28} {}  {}",
            self.criterion,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            parts.join("; ")
        );
        for n in &self.notes {
            s.push_str(&format!(" [{n}]"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Core,
    Phi,
    Divisor,
    Degree,
    Limits,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "core" => Ok(Suite::Core),
            "phi" => Ok(Suite::Phi),
            "divisor" => Ok(Suite::Divisor),
            "degree" => Ok(Suite::Degree),
            "limits" => Ok(Suite::Limits),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidInput(format!("unknown suite {s:?}"))),
        }
    }
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Core => &[1],
            Suite::Phi => &[2, 3],
            Suite::Divisor => &[4],
            Suite::Degree => &[5, 6],
            Suite::Limits => &[7, 8],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Runs every criterion of `suite`. With `timings`, each check also
/// carries its wall time and the runtime budget becomes one of its parts.
pub fn run_suite(suite: Suite, seed: u64, timings: bool) -> SuiteReport {
    let checks: Vec<Check> = suite.criteria().iter().map(|&c| run_criterion(c, seed, timings)).collect();
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport {
        suite,
        seed,
        checks,
        passed,
    }
}

pub fn run_criterion(criterion: u8, seed: u64, timings: bool) -> Check {
    let seed = seed.wrapping_add(criterion as u64 * 0x9e37_79b9);
    let mut check = match criterion {
        1 => elliptic_kernel(seed),
        2 => even_solutions(seed),
        3 => lame_one(seed),
        4 => divisor_consistency(seed),
        5 => degree_table(seed),
        6 => additivity(seed),
        7 => asymptotics(seed),
        8 => splitting(seed),
        _ => {
            let mut c = Check::new(criterion, "unknown");
            c.error("criterion", &Error::InvalidInput(format!("no criterion {criterion}")));
            c
        }
    };
    if !timings {
        check.seconds = None;
        check.parts.retain(|p| p.name != "runtime_s");
        check.passed = check.errors == 0 && check.parts.iter().all(|p| p.passed);
    }
    check
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_tau(rng: &mut ChaCha8Rng) -> Complex64 {
    cx(rng.gen_range(-0.4..0.4), rng.gen_range(0.85..1.6))
}

/// `p` in the centred cell with `|y| <= 0.4`, `|x| <= 0.45`, kept away
/// from `E_tau[2]` and from the zeros of `wp`.
fn random_p(rng: &mut ChaCha8Rng, t: &Torus) -> Complex64 {
    loop {
        let p = t.from_coords(rng.gen_range(-0.45..0.45), rng.gen_range(-0.4..0.4));
        if t.half_period_distance(p) < 0.15 {
            continue;
        }
        match t.wp(p, 0) {
            Ok(w) if w.norm() > 0.1 => return p,
            _ => continue,
        }
    }
}

fn random_param(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..2.0 * PI))
}

fn random_cell_point(rng: &mut ChaCha8Rng, t: &Torus, clear: &[Complex64], clearance: f64) -> Complex64 {
    loop {
        let z = t.from_coords(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        if t.half_period_distance(z) > clearance && clear.iter().all(|&w| t.distance(z, w) > clearance) {
            return z;
        }
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// Theta-based `wp`, `wp'`, `zeta` against lattice sums, and the Legendre
/// relation.
fn elliptic_kernel(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(1, "elliptic kernel");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut legendre) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let tau = random_tau(&mut rng);
        let t = match Torus::new(tau) {
            Ok(t) => t,
            Err(e) => {
                check.error("torus", &e);
                continue;
            }
        };
        let o = LatticeOracle::new(tau, 200);
        let z = t.from_coords(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        if t.lattice_distance(z) < 0.05 {
            continue;
        }
        let run = || -> Result<f64> {
            Ok(rel(t.wp(z, 0)?, o.wp(z))
                .max(rel(t.wp(z, 1)?, o.wp_prime(z)))
                .max(rel(t.zeta(z)?, o.zeta(z))))
        };
        match run() {
            Ok(r) => worst = worst.max(r),
            Err(e) => check.error("kernel", &e),
        }
        legendre = legendre.max(t.legendre_residual().norm());
    }
    match Torus::new(I) {
        Ok(sq) => {
            legendre = legendre.max(sq.legendre_residual().norm());
            check.part("square_lattice_e3", sq.e_k(3).norm() / sq.e_k(1).norm(), Bound::Below { max: 1e-10 });
        }
        Err(e) => check.error("square lattice", &e),
    }
    check.part("max_rel_error", worst, Bound::Below { max: 1e-8 });
    check.part("legendre_residual", legendre, Bound::Below { max: 1e-10 });
    check.timed(start, 5.0)
}

/// Relative residual of `Phi''' - 4 q Phi' - 2 q' Phi` at `z`.
pub fn ode_residual(sol: &EvenSolution, z: Complex64) -> Result<f64> {
    let (q, dq) = sol.spec.eval_with_derivative(z)?;
    let f = sol.eval(z)?;
    let terms = [f[3], -4.0 * q * f[1], -2.0 * dq * f[0]];
    let scale: f64 = terms.iter().map(|v| v.norm()).sum();
    Ok((terms[0] + terms[1] + terms[2]).norm() / scale.max(f64::MIN_POSITIVE))
}

/// ODE residual and `W^2` spread at fresh random points.
fn even_solutions(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(2, "even solution");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = [[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [2, 0, 0, 0]];
    let (mut ode, mut spread) = (0.0f64, 0.0f64);
    for i in 0..30 {
        let n = MultiIndex::new(indices[i % 4]);
        let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
        let param = random_param(&mut rng);
        let spec = if (i / 4) % 2 == 0 {
            Ok(PotentialSpec::h(t.clone(), n, param))
        } else {
            let p = random_p(&mut rng, &t);
            PotentialSpec::gle(t.clone(), n, p, param)
        };
        let run = |rng: &mut ChaCha8Rng| -> Result<(f64, f64)> {
            let spec = spec?;
            let sol = solve_even(&spec)?;
            let sing = spec.singularities();
            let mut r = sol.quality;
            let mut vals = Vec::new();
            for _ in 0..8 {
                let z = random_cell_point(rng, &t, &sing, 0.1);
                r = r.max(ode_residual(&sol, z)?);
                vals.push(sol.wsq_at(z)?);
            }
            let s = vals
                .iter()
                .map(|(w, scale)| (w - sol.wsq).norm() / scale.max(f64::MIN_POSITIVE))
                .fold(sol.wsq_spread, f64::max);
            Ok((r, s))
        };
        match run(&mut rng) {
            Ok((r, s)) => {
                ode = ode.max(r);
                spread = spread.max(s);
            }
            Err(e) => check.error(&format!("sample {i} n={n}"), &e),
        }
    }
    check.part("max_ode_residual", ode, Bound::Below { max: 1e-8 });
    check.part("max_wsq_spread", spread, Bound::Below { max: 1e-7 });
    check.timed(start, 30.0)
}

/// Lamé `n = 1`: `W^2 = 4 (B - e1)(B - e2)(B - e3)` up to one constant, and
/// branch points at the `e_k`.
fn lame_one(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(3, "lame n=1 closed form");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
    let n = MultiIndex::new([1, 0, 0, 0]);
    let mut pairs = Vec::new();
    for _ in 0..10 {
        let b = random_param(&mut rng) * 1.5;
        // Index 1 is the coefficient of wp in the ansatz; fixing it keeps
        // W^2 polynomial in B.
        match solve_even_with(&PotentialSpec::h(t.clone(), n, b), Normalization::Index(1)) {
            Ok(sol) => {
                let exact = 4.0 * (b - t.e_k(1)) * (b - t.e_k(2)) * (b - t.e_k(3));
                pairs.push((sol.wsq, exact));
            }
            Err(e) => check.error("solve", &e),
        }
    }
    let num: Complex64 = pairs.iter().map(|(w, e)| e.conj() * w).sum();
    let den: f64 = pairs.iter().map(|(_, e)| e.norm_sqr()).sum();
    let k = num / den;
    let scale = pairs.iter().map(|(w, _)| w.norm()).fold(0.0, f64::max);
    let resid = pairs.iter().map(|(w, e)| (w - k * e).norm()).fold(0.0, f64::max) / scale;
    check.part("fit_residual", resid, Bound::Below { max: 1e-6 });
    check.notes.push(format!("constant = {:.12}{:+.12}i", k.re, k.im));

    let radius = 1.2 * (1..4).map(|k| t.e_k(k).norm()).fold(0.0, f64::max) + 0.5;
    match find_branch_points(&t, n, None, cx(0.0, 0.0), radius, 25) {
        Ok(bps) => {
            let miss = (1..4)
                .map(|k| {
                    bps.iter()
                        .map(|b| (b.param - t.e_k(k)).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            check.part("branch_point_error", miss, Bound::Below { max: 1e-6 });
            check.part("branch_point_count", bps.len() as f64, Bound::Equals { value: 3.0 });
        }
        Err(e) => check.error("branch points", &e),
    }
    check.timed(start, 10.0)
}

/// Horizontal (`j = 1`) or vertical (`j = 2`) path start for the monodromy
/// of the eigenfunction: at coordinate `1/2` in the transverse direction,
/// which keeps the path off the segment `[-p, p]` and its translates, with
/// the start chosen as far as possible from the divisor and the poles.
fn path_start(t: &Torus, j: usize, p: Complex64, avoid: &[Complex64]) -> Complex64 {
    let (px, py) = t.coords(p);
    let gap = 0.5 - if j == 1 { py.abs() } else { px.abs() };
    let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    for i in 0..40 {
        let s = i as f64 / 40.0;
        for off in [-0.5 * gap, 0.0, 0.5 * gap] {
            let z = if j == 1 { t.from_coords(s, 0.5 + off) } else { t.from_coords(0.5 + off, s) };
            let d = avoid.iter().map(|&a| t.distance(z, a)).fold(f64::INFINITY, f64::min);
            if d > best.0 {
                best = (d, z);
            }
        }
    }
    best.1
}

/// `y(z + omega_j) / y(z)` for
/// `y = e^{cz} prod sigma(z - a_i) / (prod sigma(z - omega_k/2)^{n_k}
/// sqrt(sigma(z - p) sigma(z + p)))`, with sigma from lattice products.
/// The square root is continued along the straight path; the sign is read
/// off a fine tracking with the theta-based sigma.
fn sigma_law_multiplier(
    spec: &PotentialSpec,
    o: &LatticeOracle,
    d: &Divisor,
    j: usize,
) -> Result<Complex64> {
    let t = &spec.torus;
    let p = t.reduce_centered(spec.p().ok_or_else(|| Error::InvalidInput("GLE only".into()))?).0;
    let mut avoid = d.points.clone();
    avoid.extend([p, -p]);
    avoid.extend((0..4).map(|k| t.half_period(k)));
    let z0 = path_start(t, j, p, &avoid);
    let om = if j == 1 { cx(1.0, 0.0) } else { t.tau };
    let z1 = z0 + om;

    let mut ratio = (d.c * om).exp();
    for &a in &d.points {
        ratio *= o.sigma(z1 - a) / o.sigma(z0 - a);
    }
    for k in 0..4 {
        let nk = spec.n.n[k] as i32;
        if nk > 0 {
            let h = t.half_period(k);
            ratio /= (o.sigma(z1 - h) / o.sigma(z0 - h)).powi(nk);
        }
    }
    let g = |w: Complex64| t.sigma(w - p) * t.sigma(w + p);
    let steps = 512;
    let mut root = g(z0).sqrt();
    let root0 = root;
    for i in 1..=steps {
        let w = z0 + om * (i as f64 / steps as f64);
        let r = g(w).sqrt();
        root = if (r - root).norm() <= (r + root).norm() { r } else { -r };
    }
    let tracked = root / root0;
    let go = |w: Complex64| o.sigma(w - p) * o.sigma(w + p);
    let mut half = (go(z1) / go(z0)).sqrt();
    if (half - tracked).norm() > (half + tracked).norm() {
        half = -half;
    }
    Ok(ratio / half)
}

fn lattice_shift(t: &Torus, z: Complex64) -> (f64, f64, f64) {
    let (x, y) = t.coords(z);
    let (m, n) = (x.round(), y.round());
    (m, n, (z - t.from_coords(m, n)).norm())
}

/// Sum rule, both `c` rules, the log-derivative identity, `A` recovery and
/// the sigma-law monodromy on random completely reducible samples.
fn divisor_consistency(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(4, "divisor consistency");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [1, 1, 0, 0]];
    let mut worst = [0.0f64; 5];
    let (mut accepted, mut skipped, mut attempts) = (0usize, 0usize, 0usize);
    let mut oracles: Vec<(Complex64, LatticeOracle)> = Vec::new();
    let taus: Vec<Complex64> = (0..5).map(|_| random_tau(&mut rng)).collect();
    while accepted < 50 && attempts < 200 {
        attempts += 1;
        let n = MultiIndex::new(indices[accepted % 4]);
        let tau = taus[accepted % taus.len()];
        let t = Arc::new(Torus::new(tau).expect("tau in upper half plane"));
        let p = random_p(&mut rng, &t);
        let a = random_param(&mut rng);
        let sol = match PotentialSpec::gle(t.clone(), n, p, a).and_then(|s| solve_even(&s)) {
            Ok(s) => s,
            Err(e) => {
                check.error("solve", &e);
                continue;
            }
        };
        if sol.reducibility() != Reducibility::CompletelyReducible {
            skipped += 1;
            continue;
        }
        let d = match divisor_of(&sol, 1) {
            Ok(d) if d.case_tag == CaseTag::AI => d,
            Ok(_) => {
                skipped += 1;
                continue;
            }
            Err(e) => {
                check.error("divisor", &e);
                continue;
            }
        };
        if !oracles.iter().any(|(x, _)| *x == tau) {
            oracles.push((tau, LatticeOracle::new(tau, 120)));
        }
        let o = &oracles.iter().find(|(x, _)| *x == tau).expect("oracle cached").1;
        let spec = &sol.spec;
        let run = || -> Result<[f64; 5]> {
            let cs = 1.0 + d.c.norm();
            let eps1 = sigma_law_multiplier(spec, o, &d, 1)?;
            let eps2 = sigma_law_multiplier(spec, o, &d, 2)?;
            // (r, s) from the measured multipliers, fixed up to integers by
            // the sum rule; then c = r eta_1 + s eta_2 must hold exactly.
            let s0 = -eps1.ln() / (2.0 * PI * I);
            let r0 = eps2.ln() / (2.0 * PI * I);
            let sum = point_sum(spec, &d.points);
            let (m, k, sum_rule) = lattice_shift(&t, sum - r0 - s0 * tau);
            let (r, s) = (r0 + m, s0 + k);
            let c_rs = rel(r * t.eta[0] + s * t.eta[1], d.c);
            let mut c_rules = (c_rule_p(spec, &d.points)? - d.c).norm() / cs;
            for kk in 0..4 {
                if n.n[kk] > 0 {
                    c_rules = c_rules.max((c_rule_half_period(spec, &d.points, kk)? - d.c).norm() / cs);
                }
            }
            let mut ident: f64 = 0.0;
            for (x, y) in [(0.17, 0.29), (0.58, 0.71), (0.83, 0.36)] {
                ident = ident.max(log_derivative_residual(spec, &d.points, d.c, t.from_coords(x, y))?);
            }
            let ra = (recover_a(&d, spec)? - a).norm() / a.norm();
            let (_, s_div) = monodromy_rs(&d, spec);
            let e = (epsilon_1(s_div) - eps1).norm() / eps1.norm();
            Ok([sum_rule, c_rs.max(c_rules), ident, ra, e])
        };
        match run() {
            Ok(v) => {
                for (w, x) in worst.iter_mut().zip(v) {
                    *w = w.max(x);
                }
                accepted += 1;
            }
            Err(e) => {
                check.error("sample", &e);
                accepted += 1;
            }
        }
    }
    check.part("samples", accepted as f64, Bound::Equals { value: 50.0 });
    check.part("sum_rule", worst[0], Bound::Below { max: 1e-6 });
    check.part("c_rules", worst[1], Bound::Below { max: 1e-6 });
    check.part("log_derivative_identity", worst[2], Bound::Below { max: 1e-6 });
    check.part("a_recovery", worst[3], Bound::Below { max: 1e-6 });
    check.part("epsilon_1_vs_sigma_law", worst[4], Bound::Below { max: 1e-7 });
    if skipped > 0 {
        check.notes.push(format!("{skipped} draws not completely reducible or not case a-i, redrawn"));
    }
    check.timed(start, 120.0)
}

const DEGREE_INDICES: [[u32; 4]; 4] = [[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0], [1, 1, 0, 0]];

/// Measured degrees of every family in the table, by fit and by contour.
fn degree_table(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(5, "degree table");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0usize;
    let mut runs = 0usize;
    for _ in 0..2 {
        let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
        let ps = [random_p(&mut rng, &t), random_p(&mut rng, &t)];
        for n in DEGREE_INDICES {
            let n = MultiIndex::new(n);
            let mut fams = vec![FamilySpec::h(t.clone(), n)];
            for &p in &ps {
                fams.push(FamilySpec::gle(t.clone(), n, p).expect("p away from half periods"));
            }
            for fam in fams {
                runs += 1;
                match measure_degree(&fam, DegreeMethod::Both, rng.gen()) {
                    Ok(r) if r.agrees => {}
                    Ok(r) => {
                        mismatches += 1;
                        check.notes.push(format!(
                            "{:?} n={n} tau={:.3} measured {} expected {}{}",
                            r.family,
                            fam.torus.tau,
                            r.measured_degree,
                            r.formula_degree,
                            r.note.map(|s| format!(" ({s})")).unwrap_or_default()
                        ));
                    }
                    Err(e) => {
                        mismatches += 1;
                        check.error(&format!("n={n}"), &e);
                    }
                }
            }
        }
    }
    check.part("families", runs as f64, Bound::Equals { value: 24.0 });
    check.part("mismatches", mismatches as f64, Bound::Equals { value: 0.0 });
    check.timed(start, 900.0)
}

/// `deg sigma_{n,p} = deg sigma_{n^+} + deg sigma_{n^-}` in two cases.
fn additivity(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(6, "additivity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
    let p = random_p(&mut rng, &t);
    for (n, k, expected) in [([1, 0, 0, 0], 0, (3, 3, 0)), ([1, 1, 0, 0], 1, (5, 4, 1))] {
        match verify_additivity(MultiIndex::new(n), k, &t, p, DegreeMethod::Both, rng.gen()) {
            Ok(r) => {
                let label = format!("{}{}{}{}", n[0], n[1], n[2], n[3]);
                check.part(format!("gle_{label}"), r.gle_degree as f64, Bound::Equals { value: expected.0 as f64 });
                check.part(format!("plus_{label}"), r.plus_degree as f64, Bound::Equals { value: expected.1 as f64 });
                check.part(format!("minus_{label}"), r.minus_degree as f64, Bound::Equals { value: expected.2 as f64 });
            }
            Err(e) => check.error("additivity", &e),
        }
    }
    check.timed(start, 900.0)
}

/// `|f(A) - wp(p)|` along `A = 10^2, 10^3, 10^4`, and `f(B) C^2 / (4B)` at
/// `B = 10^4` for the H family.
fn asymptotics(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(7, "asymptotics");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
    let p = random_p(&mut rng, &t);
    let n = MultiIndex::new([1, 0, 0, 0]);
    let run = || -> Result<(Vec<f64>, Complex64)> {
        let fam = FamilySpec::gle(t.clone(), n, p)?;
        let wpp = t.wp(p, 0)?;
        let gaps = [1e2, 1e3, 1e4]
            .iter()
            .map(|&a| Ok((f_eval(&fam, cx(a, 0.0))? - wpp).norm()))
            .collect::<Result<Vec<f64>>>()?;
        let h = FamilySpec::h(t.clone(), n);
        let b = 1e4;
        let w = n.weight() as f64;
        let ratio = f_eval(&h, cx(b, 0.0))? * w * w / (4.0 * b);
        Ok((gaps, ratio))
    };
    match run() {
        Ok((gaps, ratio)) => {
            let increases = gaps.windows(2).filter(|w| w[1] >= w[0]).count();
            check.part("gap_at_1e4", gaps[2], Bound::Below { max: gaps[0] });
            check.part("non_decreasing_steps", increases as f64, Bound::Equals { value: 0.0 });
            check.part("h_ratio_re", ratio.re, Bound::Range { lo: 0.95, hi: 1.05 });
            check.part("h_ratio_im", ratio.im.abs(), Bound::Below { max: 0.05 });
            check.notes.push(format!("gaps {:.3e} {:.3e} {:.3e}", gaps[0], gaps[1], gaps[2]));
        }
        Err(e) => check.error("asymptotics", &e),
    }
    check.timed(start, 60.0)
}

/// `p -> 0` splitting for `n = (1,0,0,0)` on both branches.
fn splitting(seed: u64) -> Check {
    let start = Instant::now();
    let mut check = Check::new(8, "splitting limit");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Arc::new(Torus::new(random_tau(&mut rng)).expect("tau in upper half plane"));
    let b_target = random_param(&mut rng);
    let n = MultiIndex::new([1, 0, 0, 0]);
    for branch in [Branch::Plus, Branch::Minus] {
        let label = match branch {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        };
        match run_p_limit(&t, n, 0, branch, b_target, &[1e-1, 1e-2, 1e-3]) {
            Ok(s) => {
                check.part(
                    format!("distance_{label}"),
                    s.final_distance.unwrap_or(f64::INFINITY),
                    Bound::Below { max: 1e-2 },
                );
                check.part(
                    format!("b_slope_{label}"),
                    s.b_slope.unwrap_or(f64::NAN),
                    Bound::Range { lo: 0.7, hi: 2.3 },
                );
            }
            Err(e) => check.error(label, &e),
        }
    }
    check.timed(start, 120.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Below { max: 1.0 }.holds(1.0));
        assert!(!Bound::Range { lo: 0.7, hi: 2.3 }.holds(f64::NAN));
        assert!(Bound::Equals { value: 3.0 }.holds(3.0));
    }

    #[test]
    fn suites_parse() {
        assert_eq!("limits".parse::<Suite>().unwrap(), Suite::Limits);
        assert!("x".parse::<Suite>().is_err());
        assert_eq!(Suite::All.criteria().len(), 8);
    }

    #[test]
    fn sigma_law_matches_epsilon_for_trivial_index() {
        let t = Arc::new(Torus::new(cx(0.1, 1.2)).unwrap());
        let spec = PotentialSpec::gle(t.clone(), MultiIndex::zero(), cx(0.23, 0.31), cx(0.6, -0.4)).unwrap();
        let sol = solve_even(&spec).unwrap();
        let d = divisor_of(&sol, 1).unwrap();
        let o = LatticeOracle::new(t.tau, 100);
        let eps = sigma_law_multiplier(&spec, &o, &d, 1).unwrap();
        let (_, s) = monodromy_rs(&d, &spec);
        assert!((epsilon_1(s) - eps).norm() < 1e-7 * eps.norm());
    }
}
