//! Zero divisors of the even elliptic solution and the data they carry.
//!
//! `Phi` is even and elliptic, so it is a rational function of
//! `x = wp(z)`. Using `wp(z + omega_k/2) = e_k + h_k / (x - e_k)` with
//! `h_k = (e_k - e_i)(e_k - e_j)`, clearing denominators turns `Phi` into a
//! polynomial in `x` of degree `N` (GLE) or `N_hat` (H). Each root `x_j`
//! gives the torus pair `+-u_j` with `wp(u_j) = x_j`; a drop in degree is a
//! root at `x = infinity`, i.e. a zero at the lattice point.
//!
//! The eigenfunction `y_1` with `y_1(z) y_1(-z) = Phi` vanishes at exactly
//! one point of each pair. With `W = y_1 y_2' - y_1' y_2` and
//! `y_2(z) = y_1(-z)`, `y_1'/y_1 = (Phi' - W) / (2 Phi)`, so a simple zero
//! `a` of `y_1` satisfies `Phi'(a) = -W`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour;
use crate::elliptic::{Torus, TorusPoint, POINT_EQ_TOL, POLE_GUARD};
use crate::error::{Error, Result};
use crate::even_solution::{BasisFn, EvenSolution, Reducibility};
use crate::poly;
use crate::potential::{diag_d, diag_e, Family, PotentialSpec};

/// Tolerance of the divisor identities.
pub const TOL_DIV: f64 = 1e-6;
const PAIR_MARGIN_MIN: f64 = 1e-3;
const X_CLUSTER_TOL: f64 = 1e-5;
/// Below this separation (relative to `min(1, Im tau)`) the local condition
/// for `c` gives way to the identity at distant probes.
const HH_MIN_SEPARATION: f64 = 0.05;
const C_PROBES: [(f64, f64); 6] = [(0.31, 0.17), (0.63, 0.41), (0.22, 0.74), (0.81, 0.88), (0.47, 0.29), (0.12, 0.46)];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    #[serde(rename = "a-i")]
    AI,
    #[serde(rename = "a-ii")]
    AII,
    #[serde(rename = "a-iii")]
    AIII,
    #[serde(rename = "nonCR")]
    NonCr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Monodromy {
    Rs {
        #[serde(with = "crate::report::complex")]
        r: Complex64,
        #[serde(with = "crate::report::complex")]
        s: Complex64,
    },
    Half {
        m1: f64,
        m2: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Divisor {
    /// Representatives in the fundamental domain (used for all sums).
    #[serde(with = "crate::report::complex_vec")]
    pub points: Vec<Complex64>,
    #[serde(with = "crate::report::complex")]
    pub c: Complex64,
    pub case_tag: CaseTag,
    pub monodromy: Monodromy,
    #[serde(with = "crate::report::complex")]
    pub w_used: Complex64,
    /// Per-point sign-selection margins `| |Phi'(a)+W| - |Phi'(-a)+W| | / |W|`.
    #[serde(with = "crate::report::finite_vec")]
    pub margins: Vec<f64>,
    /// Spread of the Hermite–Halphen `c` over the usable points.
    #[serde(with = "crate::report::finite")]
    pub c_spread: f64,
}

impl Divisor {
    pub fn torus_points(&self, t: &Torus) -> Vec<TorusPoint> {
        self.points.iter().map(|&z| t.point(z)).collect()
    }
}

/// One root of the `x`-polynomial.
#[derive(Debug, Clone, Copy)]
pub struct XRoot {
    /// `None` for the root at infinity.
    pub x: Option<Complex64>,
    /// `u` with `wp(u) = x`, polished on `Phi`.
    pub u: Complex64,
}

/// `h_k = (e_k - e_i)(e_k - e_j)` for `k = 1..=3`.
fn h_k(t: &Torus, k: usize) -> Complex64 {
    let e = t.e;
    let ek = e[k - 1];
    let mut h = ONE;
    for (i, ei) in e.iter().enumerate() {
        if i != k - 1 {
            h *= ek - ei;
        }
    }
    h
}

/// Coefficients (ascending) of `Den(x) * Phi(x)` where
/// `Den = prod_{k>=1} (x - e_k)^{n_k} [* (x - wp(p))]`.
pub fn x_numerator(sol: &EvenSolution) -> Result<Vec<Complex64>> {
    let t = sol.torus();
    let n = sol.spec.n.n;
    let lin = |r: Complex64| vec![-r, ONE];
    let wpp = match sol.spec.p() {
        Some(p) => Some(t.wp(p, 0)?),
        None => None,
    };
    let den_without = |skip_k: Option<usize>, skip_pole: bool| -> Vec<Complex64> {
        let mut d = vec![ONE];
        for k in 1..4 {
            if Some(k) != skip_k {
                d = poly::mul(&d, &poly::pow(&lin(t.e_k(k)), n[k]));
            }
        }
        if let (Some(w), false) = (wpp, skip_pole) {
            d = poly::mul(&d, &lin(w));
        }
        d
    };
    let full = den_without(None, false);
    let mut num = Vec::new();
    for (c, f) in sol.coeffs.iter().zip(&sol.basis) {
        let term = match *f {
            BasisFn::One => full.clone(),
            BasisFn::WpPow { k: 0, j } => {
                let mut xj = vec![ZERO; j as usize];
                xj.push(ONE);
                poly::mul(&xj, &full)
            }
            BasisFn::WpPow { k, j } => {
                let ek = t.e_k(k);
                let top = poly::pow(&[h_k(t, k) - ek * ek, ek], j);
                let rest = poly::pow(&lin(ek), n[k] - j);
                poly::mul(&poly::mul(&top, &rest), &den_without(Some(k), false))
            }
            BasisFn::InvPole => den_without(None, true),
            BasisFn::ShiftedPole { k: 0, m } => {
                let mut xm = vec![ZERO; m as usize];
                xm.push(ONE);
                poly::mul(&xm, &den_without(None, true))
            }
            BasisFn::ShiftedPole { k, m } => {
                // y - Y = (e_k - Y)(x - wp(p)) / (x - e_k), so the term is
                // top^m / ((e_k - Y) (x - e_k)^{m-1} (x - wp(p))).
                let ek = t.e_k(k);
                let big_y = t.wp(sol.spec.p().expect("pole term only for GLE") + t.half_period(k), 0)?;
                let top = poly::pow(&[h_k(t, k) - ek * ek, ek], m);
                let scale = ONE / (ek - big_y);
                let term = poly::mul(&top, &den_without(Some(k), true));
                term.iter().map(|c| c * scale).collect()
            }
        };
        poly::add_into(&mut num, &term, *c);
    }
    Ok(num)
}

fn phi_scale(sol: &EvenSolution, z: Complex64) -> Result<f64> {
    let d = crate::even_solution::basis_derivs(&sol.spec, &sol.basis, z)?;
    Ok(sol
        .coeffs
        .iter()
        .zip(&d)
        .map(|(c, f)| (c * f[0]).norm())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE))
}

/// Safeguarded Newton on `Phi` itself.
fn polish_on_phi(sol: &EvenSolution, mut u: Complex64) -> Complex64 {
    let t = sol.torus();
    for _ in 0..6 {
        let Ok([f, f1, _, _]) = sol.eval(u) else { break };
        let Ok(scale) = phi_scale(sol, u) else { break };
        if f.norm() <= 1e-15 * scale || f1.norm() == 0.0 {
            break;
        }
        let step = f / f1;
        if !step.is_finite() || step.norm() > 1e-4 * t.tau.im.min(1.0) {
            break;
        }
        let cand = u - step;
        match sol.eval(cand) {
            Ok([g, ..]) if g.norm() < f.norm() => u = cand,
            _ => break,
        }
    }
    u
}

/// Roots of the `x`-polynomial with their torus preimages.
pub fn x_roots(sol: &EvenSolution) -> Result<Vec<XRoot>> {
    let t = sol.torus();
    let num = x_numerator(sol)?;
    let (trimmed, dropped) = poly::trim(&num, 1e-15);
    let mut out = Vec::with_capacity(num.len());
    for _ in 0..dropped {
        out.push(XRoot { x: None, u: ZERO });
    }
    for x in poly::roots(&trimmed) {
        let u0 = t.wp_inverse(x)?;
        let u = if t.half_period_distance(u0) < 1e-4 {
            u0
        } else {
            polish_on_phi(sol, u0)
        };
        out.push(XRoot {
            x: Some(x),
            u: t.reduce(u),
        });
    }
    Ok(out)
}

/// All `2N` (or `2 N_hat`) zeros of `Phi` in the fundamental domain, with
/// multiplicity.
pub fn torus_zeros(sol: &EvenSolution) -> Result<Vec<TorusPoint>> {
    let t = sol.torus();
    let roots = x_roots(sol)?;
    let expected = sol.spec.divisor_size();
    if roots.len() != expected {
        return Err(Error::ZeroCountMismatch {
            found: 2 * roots.len(),
            expected: 2 * expected,
        });
    }
    let mut pts = Vec::with_capacity(2 * roots.len());
    for r in roots {
        pts.push(t.point(r.u));
        pts.push(t.point(-r.u));
    }
    Ok(pts)
}

/// Argument-principle cross-check of the zero count: zeros are counted by
/// winding on small discs around the distinct zeros found, poles by winding
/// around the singular points. Returns `(zeros, poles)`, both unrounded.
pub fn argument_principle_counts(sol: &EvenSolution) -> Result<(f64, f64)> {
    let t = sol.torus();
    let spec = &sol.spec;
    let zeros = torus_zeros(sol)?;
    let mut distinct: Vec<Complex64> = Vec::new();
    for z in &zeros {
        if !distinct.iter().any(|d| t.distance(*d, z.rep) < 1e-6) {
            distinct.push(z.rep);
        }
    }
    let mut poles: Vec<Complex64> = (0..4)
        .filter(|&k| spec.n.n[k] > 0)
        .map(|k| t.half_period(k))
        .collect();
    if let Some(p) = spec.p() {
        poles.push(t.reduce(p));
        poles.push(t.reduce(-p));
    }
    let all: Vec<Complex64> = distinct.iter().chain(poles.iter()).copied().collect();
    let radius_for = |c: Complex64| {
        let sep = all
            .iter()
            .filter(|&&o| t.distance(o, c) > 1e-9)
            .map(|&o| t.distance(o, c))
            .fold(f64::INFINITY, f64::min);
        (0.3 * sep).min(0.05 * t.tau.im.min(1.0))
    };
    let phi = |z: Complex64| sol.phi(z);
    let mut zc = 0.0;
    for &d in &distinct {
        let r = radius_for(d);
        zc += contour::winding_circle(phi, d, r, 32)?;
    }
    let mut pc = 0.0;
    for &p in &poles {
        let r = radius_for(p);
        pc -= contour::winding_circle(phi, p, r, 32)?;
    }
    Ok((zc, pc))
}

/// Hermite–Halphen local condition at `a_i`: the coefficient of
/// `1/(z - a_i)` in `(c + D)^2 + D'` must vanish.
fn hh_c(spec: &PotentialSpec, pts: &[Complex64], i: usize) -> Result<Complex64> {
    let t = &spec.torus;
    let ai = pts[i];
    let mut r = ZERO;
    for (j, &aj) in pts.iter().enumerate() {
        if j != i {
            r += t.zeta(ai - aj)?;
        }
    }
    for k in 0..4 {
        if spec.n.n[k] > 0 {
            r -= t.zeta(ai - t.half_period(k))? * (spec.n.n[k] as f64);
        }
    }
    if let Some(p) = spec.p() {
        r -= 0.5 * (t.zeta(ai + p)? + t.zeta(ai - p)?);
    }
    Ok(-r)
}

/// `c` from `q = (c + D)^2 + E` at probe points clear of the divisor. Each
/// probe gives two candidates `-D +- sqrt(q - E)`; the candidate of the
/// first probe that the other probes reproduce is kept.
fn c_from_identity(spec: &PotentialSpec, pts: &[Complex64]) -> Result<(Complex64, f64)> {
    let t = &spec.torus;
    let clearance = 0.05 * t.tau.im.min(1.0);
    let mut cands: Vec<[Complex64; 2]> = Vec::new();
    for &(x, y) in &C_PROBES {
        let z = t.from_coords(x, y);
        if spec.singular_distance(z) < clearance || pts.iter().any(|&a| t.distance(z, a) < clearance) {
            continue;
        }
        let q = spec.eval(z)?;
        let d = diag_d(t, &spec.n, pts, spec.p(), z)?;
        let e = diag_e(t, &spec.n, pts, spec.p(), z)?;
        let r = (q - e).sqrt();
        cands.push([-d + r, -d - r]);
    }
    if cands.len() < 3 {
        return Err(Error::CaseMismatch("too few probe points to evaluate c".into()));
    }
    let gather = |c0: Complex64| -> (Complex64, f64) {
        let chosen: Vec<Complex64> = cands
            .iter()
            .map(|pair| if (pair[0] - c0).norm() <= (pair[1] - c0).norm() { pair[0] } else { pair[1] })
            .collect();
        let mean = chosen.iter().sum::<Complex64>() / chosen.len() as f64;
        let spread = chosen.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max) / (1.0 + mean.norm());
        (mean, spread)
    };
    let a = gather(cands[0][0]);
    let b = gather(cands[0][1]);
    Ok(if a.1 <= b.1 { a } else { b })
}

/// Points at which the local condition can be evaluated: simple, away from
/// the singular set.
fn usable_points(spec: &PotentialSpec, pts: &[Complex64]) -> Vec<usize> {
    let t = &spec.torus;
    (0..pts.len())
        .filter(|&i| {
            let simple = pts
                .iter()
                .enumerate()
                .all(|(j, &o)| j == i || t.distance(o, pts[i]) > 1e-5);
            simple && spec.singular_distance(pts[i]) > 1e-5
        })
        .collect()
}

/// Distance from `pts[i]` to the other points and the singular set.
fn separation(spec: &PotentialSpec, pts: &[Complex64], i: usize) -> f64 {
    let t = &spec.torus;
    pts.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &o)| t.distance(o, pts[i]))
        .fold(spec.singular_distance(pts[i]), f64::min)
}

fn c_from_points(spec: &PotentialSpec, pts: &[Complex64]) -> Result<(Complex64, f64)> {
    let idx = usable_points(spec, pts);
    let best_sep = idx.iter().map(|&i| separation(spec, pts, i)).fold(0.0, f64::max);
    if best_sep < HH_MIN_SEPARATION * spec.torus.tau.im.min(1.0) {
        // The local condition cancels terms of size 1/sep; the identity at
        // points far from the cluster is well conditioned.
        if let Ok(r) = c_from_identity(spec, pts) {
            return Ok(r);
        }
    }
    if idx.is_empty() {
        return Err(Error::CaseMismatch("no simple regular point to evaluate c".into()));
    }
    // Only the best-separated points: the local condition at a crowded
    // point cancels terms of size 1/sep.
    let idx: Vec<usize> = idx
        .into_iter()
        .filter(|&i| separation(spec, pts, i) >= 0.5 * best_sep)
        .collect();
    let vals = idx
        .iter()
        .map(|&i| hh_c(spec, pts, i))
        .collect::<Result<Vec<_>>>()?;
    let mean = vals.iter().sum::<Complex64>() / vals.len() as f64;
    let spread = vals.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max) / (1.0 + mean.norm());
    Ok((mean, spread))
}

/// `S = sum a_i - sum_{k=1}^3 n_k omega_k / 2` for the given representatives.
pub fn point_sum(spec: &PotentialSpec, pts: &[Complex64]) -> Complex64 {
    let t = &spec.torus;
    let mut s: Complex64 = pts.iter().sum();
    for k in 1..4 {
        s -= t.half_period(k) * (spec.n.n[k] as f64);
    }
    s
}

/// Solves `r + s tau = S`, `r eta_1 + s eta_2 = c`.
pub fn solve_rs(t: &Torus, sum: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let det = t.eta[1] - t.tau * t.eta[0];
    let r = (sum * t.eta[1] - t.tau * c) / det;
    let s = (c - t.eta[0] * sum) / det;
    (r, s)
}

/// The divisor of `y_1` for the Wronskian `sign * sol.w` (case a-i).
pub fn embed(sol: &EvenSolution, sign: i32) -> Result<Divisor> {
    embed_impl(sol, sign, false)
}

/// The divisor when `+-p` are zeros of `Phi` (cases a-ii and a-iii).
pub fn embed_degenerate(sol: &EvenSolution, sign: i32) -> Result<Divisor> {
    embed_impl(sol, sign, true)
}

/// Dispatches to [`embed`], [`embed_degenerate`] or [`noncr_data`].
pub fn divisor_of(sol: &EvenSolution, sign: i32) -> Result<Divisor> {
    if sol.reducibility() == Reducibility::NotCompletelyReducible {
        return noncr_data(sol);
    }
    match embed(sol, sign) {
        Err(Error::CaseMismatch(msg)) if msg.starts_with("degenerate") => embed_degenerate(sol, sign),
        r => r,
    }
}

fn check_sign(sign: i32) -> Result<f64> {
    match sign {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::InvalidInput(format!("sign must be +1 or -1, got {sign}"))),
    }
}

fn embed_impl(sol: &EvenSolution, sign: i32, degenerate: bool) -> Result<Divisor> {
    let sgn = check_sign(sign)?;
    if sol.reducibility() != Reducibility::CompletelyReducible {
        return Err(Error::CaseMismatch("embedding requires W != 0".into()));
    }
    let spec = &sol.spec;
    let t = &spec.torus;
    let w = sol.w * sgn;

    if spec.divisor_size() == 0 {
        // y_1 = e^{cz}, W = -2c.
        let c = -w / 2.0;
        let (r, s) = solve_rs(t, ZERO, c);
        return Ok(Divisor {
            points: Vec::new(),
            c,
            case_tag: CaseTag::AI,
            monodromy: Monodromy::Rs { r, s },
            w_used: w,
            margins: Vec::new(),
            c_spread: 0.0,
        });
    }

    let roots = x_roots(sol)?;
    let wpp = match spec.p() {
        Some(p) => Some((p, t.wp(p, 0)?)),
        None => None,
    };
    let near_pole: Vec<usize> = match wpp {
        Some((_, x0)) => roots
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                // Near a half period x compresses distances quadratically, so
                // closeness in x is confirmed on the torus.
                let (p, _) = wpp.expect("GLE");
                let u_close = t.distance(r.u, p).min(t.distance(r.u, -p)) < 0.1 * t.half_period_distance(p);
                u_close && r.x.map_or(false, |x| (x - x0).norm() < X_CLUSTER_TOL * (1.0 + x0.norm()))
            })
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    };
    let is_degenerate = near_pole.len() >= 2;
    if is_degenerate != degenerate {
        return Err(Error::CaseMismatch(if is_degenerate {
            "degenerate: +-p are zeros of Phi".into()
        } else {
            "no double root at wp(p); not a degenerate case".into()
        }));
    }

    let mut points = Vec::with_capacity(spec.divisor_size());
    let mut margins = Vec::new();
    let mut case_tag = CaseTag::AI;
    if degenerate {
        let (p, _) = wpp.expect("degenerate case is GLE only");
        let d1 = sol.eval(p)?[1];
        let a_ii = (d1 + w / 2.0).norm();
        let a_iii = (d1 - w / 2.0).norm();
        let margin = (a_ii - a_iii).abs() / w.norm();
        if margin < PAIR_MARGIN_MIN {
            return Err(Error::AmbiguousPairing { margin });
        }
        let (tag, at) = if a_ii < a_iii { (CaseTag::AII, p) } else { (CaseTag::AIII, -p) };
        case_tag = tag;
        points.push(t.reduce(at));
        points.push(t.reduce(at));
        margins.push(margin);
    }
    for (i, r) in roots.iter().enumerate() {
        if degenerate && near_pole.iter().take(2).any(|&j| j == i) {
            continue;
        }
        if r.x.is_none() || t.half_period_distance(r.u) < 1e-5 {
            return Err(Error::CaseMismatch(
                "zero of y_1 at a half period in a completely reducible case".into(),
            ));
        }
        let d1 = sol.eval(r.u)?[1];
        let plus = (d1 + w).norm();
        let minus = (-d1 + w).norm();
        let margin = (plus - minus).abs() / w.norm();
        if margin < PAIR_MARGIN_MIN {
            return Err(Error::AmbiguousPairing { margin });
        }
        margins.push(margin);
        points.push(if plus <= minus { r.u } else { t.reduce(-r.u) });
    }

    let (c, c_spread) = if degenerate {
        degenerate_c(spec, &points)?
    } else {
        c_from_points(spec, &points)?
    };
    let (r, s) = solve_rs(t, point_sum(spec, &points), c);
    Ok(Divisor {
        points,
        c,
        case_tag,
        monodromy: Monodromy::Rs { r, s },
        w_used: w,
        margins,
        c_spread,
    })
}

fn degenerate_c(spec: &PotentialSpec, pts: &[Complex64]) -> Result<(Complex64, f64)> {
    if let Some(k) = (0..4).find(|&k| spec.n.n[k] > 0) {
        if pts.iter().all(|&a| spec.torus.distance(a, spec.torus.half_period(k)) > 1e-5) {
            return Ok((c_rule_half_period(spec, pts, k)?, 0.0));
        }
    }
    c_from_points(spec, pts)
}

/// Data of a not completely reducible equation (`W = 0`).
pub fn noncr_data(sol: &EvenSolution) -> Result<Divisor> {
    if sol.reducibility() != Reducibility::NotCompletelyReducible {
        return Err(Error::CaseMismatch("W != 0: use embed".into()));
    }
    let spec = &sol.spec;
    let t = &spec.torus;
    let roots = x_roots(sol)?;

    // Half-period roots (x = e_k or infinity) give one point each; the other
    // roots must pair up as double roots giving {u, -u}.
    let mut points = Vec::new();
    let mut generic: Vec<Complex64> = Vec::new();
    for r in &roots {
        match r.x {
            None => points.push(ZERO),
            Some(x) => {
                let hp = (1..4).find(|&k| (x - t.e_k(k)).norm() < X_CLUSTER_TOL * (1.0 + x.norm()));
                match hp {
                    Some(k) => points.push(t.half_period(k)),
                    None => generic.push(x),
                }
            }
        }
    }
    let mut defect: f64 = 0.0;
    let mut used = vec![false; generic.len()];
    for i in 0..generic.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..generic.len() {
            if !used[j] {
                let d = (generic[i] - generic[j]).norm() / (1.0 + generic[i].norm());
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        let Some((j, d)) = best else {
            return Err(Error::SymmetryViolation { defect: f64::INFINITY });
        };
        used[j] = true;
        defect = defect.max(d);
        let x = 0.5 * (generic[i] + generic[j]);
        let u = t.wp_inverse(x)?;
        points.push(t.reduce(u));
        points.push(t.reduce(-u));
    }
    if defect > 1e-3 {
        return Err(Error::SymmetryViolation { defect });
    }

    let sum = point_sum(spec, &points);
    let snap = (0..4)
        .map(|k| t.distance(sum, t.half_period(k)))
        .fold(f64::INFINITY, f64::min);
    if snap > TOL_DIV {
        return Err(Error::SymmetryViolation { defect: snap });
    }
    let (c, c_spread) = if spec.divisor_size() == 0 {
        (ZERO, 0.0)
    } else {
        c_from_points(spec, &points)?
    };
    let (m1, m2) = solve_rs(t, sum, c);
    Ok(Divisor {
        points,
        c,
        case_tag: CaseTag::NonCr,
        monodromy: Monodromy::Half { m1: m1.re, m2: m2.re },
        w_used: ZERO,
        margins: Vec::new(),
        c_spread: c_spread.max(m1.im.abs()).max(m2.im.abs()),
    })
}

/// `(r, s)` of a completely reducible divisor.
pub fn monodromy_rs(d: &Divisor, spec: &PotentialSpec) -> (Complex64, Complex64) {
    solve_rs(&spec.torus, point_sum(spec, &d.points), d.c)
}

/// `c = 1/2 sum (zeta(a_i + p) + zeta(a_i - p)) - sum_{k=1}^3 n_k eta_k / 2`.
pub fn c_rule_p(spec: &PotentialSpec, pts: &[Complex64]) -> Result<Complex64> {
    let t = &spec.torus;
    let p = spec
        .p()
        .ok_or_else(|| Error::InvalidInput("c rule at +-p needs a GLE potential".into()))?;
    let mut c = ZERO;
    for &a in pts {
        c += 0.5 * (t.zeta(a + p)? + t.zeta(a - p)?);
    }
    Ok(c - eta_correction(spec))
}

/// The analogous rule at a half period with `n_k != 0`.
pub fn c_rule_half_period(spec: &PotentialSpec, pts: &[Complex64], k: usize) -> Result<Complex64> {
    let t = &spec.torus;
    if spec.n.n[k] == 0 {
        return Err(Error::InvalidInput(format!("n_{k} = 0")));
    }
    let h = t.half_period(k);
    let mut c = ZERO;
    for &a in pts {
        c += 0.5 * (t.zeta(a + h)? + t.zeta(a - h)?);
    }
    Ok(c - eta_correction(spec))
}

fn eta_correction(spec: &PotentialSpec) -> Complex64 {
    (1..4)
        .map(|k| spec.torus.eta_k(k) * (spec.n.n[k] as f64 / 2.0))
        .sum()
}

/// `A` reconstructed from a case a-i divisor.
pub fn recover_a(d: &Divisor, spec: &PotentialSpec) -> Result<Complex64> {
    if d.case_tag != CaseTag::AI {
        return Err(Error::CaseMismatch(format!("A recovery needs case a-i, got {:?}", d.case_tag)));
    }
    let Family::Gle { p, .. } = spec.family else {
        return Err(Error::InvalidInput("A recovery needs a GLE potential".into()));
    };
    let t = &spec.torus;
    let mut a = ZERO;
    for &ai in &d.points {
        a += 0.5 * (t.zeta(ai + p)? - t.zeta(ai - p)?);
    }
    a -= 0.5 * t.zeta(2.0 * p)?;
    for k in 0..4 {
        if spec.n.n[k] > 0 {
            let h = t.half_period(k);
            a -= 0.5 * (spec.n.n[k] as f64) * (t.zeta(p + h)? + t.zeta(p - h)?);
        }
    }
    Ok(a)
}

/// `epsilon_1 = exp(-2 pi i s)`.
pub fn epsilon_1(s: Complex64) -> Complex64 {
    (-2.0 * PI * I * s).exp()
}

/// Torus distance between the two point sets after negating the second.
pub fn negation_defect(t: &Torus, a: &Divisor, b: &Divisor) -> f64 {
    let neg: Vec<Complex64> = b.points.iter().map(|&z| -z).collect();
    crate::matching::matched_distance(t, &a.points, &neg)
}

/// True when `z` is within the pole guard of the lattice.
pub fn at_lattice(t: &Torus, z: Complex64) -> bool {
    t.lattice_distance(z) < POLE_GUARD
}

/// True when `z` is a 2-torsion point up to the point tolerance.
pub fn at_half_period(t: &Torus, z: Complex64) -> bool {
    t.half_period_distance(z) < POINT_EQ_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::even_solution::solve_even;
    use crate::potential::MultiIndex;
    use std::sync::Arc;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gle(n: [u32; 4], p: Complex64, a: Complex64) -> EvenSolution {
        let t = Arc::new(Torus::new(cx(0.2, 1.3)).unwrap());
        solve_even(&PotentialSpec::gle(t, MultiIndex::new(n), p, a).unwrap()).unwrap()
    }

    #[test]
    fn numerator_reproduces_phi() {
        let sol = gle([1, 1, 0, 1], cx(0.21, 0.33), cx(0.4, -0.7));
        let t = sol.torus();
        let num = x_numerator(&sol).unwrap();
        assert_eq!(num.len(), 5);
        let z = cx(0.37, 0.52);
        let x = t.wp(z, 0).unwrap();
        let mut den = x - t.wp(cx(0.21, 0.33), 0).unwrap();
        den *= x - t.e_k(1);
        den *= x - t.e_k(3);
        let lhs = poly::eval(&num, x) / den;
        let rhs = sol.phi(z).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
    }

    #[test]
    fn zeros_are_symmetric_and_counted() {
        let sol = gle([1, 0, 0, 0], cx(0.21, 0.33), cx(0.4, -0.7));
        let t = sol.torus();
        let zs = torus_zeros(&sol).unwrap();
        assert_eq!(zs.len(), 4);
        for z in &zs {
            assert!(zs.iter().any(|o| o.dist(&z.neg()) < 1e-6));
            assert!(sol.phi(z.rep).unwrap().norm() < 1e-9 * phi_scale(&sol, z.rep).unwrap());
        }
        let (zc, pc) = argument_principle_counts(&sol).unwrap();
        assert!((zc - 4.0).abs() < 0.01, "{zc}");
        assert!((pc - 4.0).abs() < 0.01, "{pc}");
        let _ = t;
    }

    #[test]
    fn sign_rule_and_negation() {
        let sol = gle([0, 0, 0, 0], cx(0.21, 0.33), cx(0.4, -0.7));
        let t = sol.torus();
        let d = embed(&sol, 1).unwrap();
        let d1 = sol.eval(d.points[0]).unwrap()[1];
        assert!((d1 + d.w_used).norm() < 1e-6 * d.w_used.norm());
        let m = embed(&sol, -1).unwrap();
        assert!(negation_defect(t, &d, &m) < 1e-7);
    }

    #[test]
    fn c_rules_and_a_recovery() {
        let (p, a) = (cx(0.21, 0.33), cx(0.4, -0.7));
        let sol = gle([1, 1, 0, 0], p, a);
        let d = embed(&sol, 1).unwrap();
        let spec = &sol.spec;
        let c37 = c_rule_p(spec, &d.points).unwrap();
        assert!((c37 - d.c).norm() < 1e-7 * (1.0 + d.c.norm()));
        for k in [0, 1] {
            let c38 = c_rule_half_period(spec, &d.points, k).unwrap();
            assert!((c38 - d.c).norm() < 1e-7 * (1.0 + d.c.norm()), "k = {k}");
        }
        let ra = recover_a(&d, spec).unwrap();
        assert!((ra - a).norm() < 1e-6 * a.norm());
        for z in [cx(0.11, 0.47), cx(0.63, 0.2)] {
            let r = crate::potential::log_derivative_residual(spec, &d.points, d.c, z).unwrap();
            assert!(r < 1e-7, "{r}");
        }
    }

    #[test]
    fn lame_ground_state_divisor() {
        let t = Arc::new(Torus::new(cx(0.2, 1.3)).unwrap());
        let e1 = t.e_k(1);
        let sol = solve_even(&PotentialSpec::h(t.clone(), MultiIndex::new([1, 0, 0, 0]), e1)).unwrap();
        let d = divisor_of(&sol, 1).unwrap();
        assert_eq!(d.case_tag, CaseTag::NonCr);
        assert_eq!(d.points.len(), 1);
        assert!(t.distance(d.points[0], t.half_period(1)) < 1e-6);
        let Monodromy::Half { m1, m2 } = d.monodromy else { panic!() };
        assert!(((2.0 * m1) - (2.0 * m1).round()).abs() < 1e-6);
        assert!(((2.0 * m2) - (2.0 * m2).round()).abs() < 1e-6);
    }
}
