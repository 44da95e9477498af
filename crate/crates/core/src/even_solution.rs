//! The even elliptic solution of the second symmetric product equation
//! `Phi''' - 4 q Phi' - 2 q' Phi = 0`.
//!
//! `Phi` is sought in the finite ansatz
//! `C_0 + sum_k sum_{j <= n_k} b_j^(k) wp(z + omega_k/2)^j [+ d / (wp(z) - wp(p))]`
//! by collocation: the operator is applied to every basis function at
//! `3 dim` points and the coefficient vector is the right singular vector of
//! the least singular value.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::Torus;
use crate::error::{Error, Result};
use crate::potential::{MultiIndex, PotentialSpec};

/// Relative tolerance on the collocation residual.
pub const TOL_ODE: f64 = 1e-8;
/// `|W^2| / scale` below this counts as a branch point.
pub const TOL_BRANCH: f64 = 1e-7;
/// Relative spread of `W^2` over validation points that aborts a solve.
pub const ZDEP_LIMIT: f64 = 1e-6;
const MIN_SV_GAP: f64 = 1e4;
const N_VALIDATION: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One even elliptic basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFn {
    One,
    /// `wp(z + omega_k/2)^j`.
    WpPow { k: usize, j: u32 },
    /// `1 / (wp(z) - wp(p))`.
    InvPole,
    /// `y^m / (y - Y)` with `y = wp(z + omega_k/2)`, `Y = wp(p + omega_k/2)`
    /// and `m = n_k + 1`. Replaces the pole term when `p` is close to
    /// `omega_k/2`, where `1 / (wp(z) - wp(p))` is nearly a combination of
    /// the powers of `y`; both span the same space.
    ShiftedPole { k: usize, m: u32 },
}

/// `p` closer than this to a half period switches the pole term to
/// [`BasisFn::ShiftedPole`].
pub const SHIFTED_POLE_RADIUS: f64 = 0.1;

/// The ansatz basis for a potential, ordered `1`, then `wp(z+omega_k/2)^j`
/// by `(k, j)`, then the pole term for GLE.
pub fn ansatz_basis(spec: &PotentialSpec) -> Vec<BasisFn> {
    let mut b = vec![BasisFn::One];
    for k in 0..4 {
        for j in 1..=spec.n.n[k] {
            b.push(BasisFn::WpPow { k, j });
        }
    }
    if let Some(p) = spec.p() {
        let (k, dist) = spec.torus.nearest_half_period(p);
        if dist < SHIFTED_POLE_RADIUS {
            b.push(BasisFn::ShiftedPole { k, m: spec.n.n[k] + 1 });
        } else {
            b.push(BasisFn::InvPole);
        }
    }
    b
}

fn pw(x: Complex64, m: i32) -> Complex64 {
    if m < 0 {
        ZERO
    } else {
        x.powi(m)
    }
}

/// `[f, f', f'', f''']` for `f = P^j` given `[P, P', P'', P''']`.
fn power_derivs(d: &[Complex64; 4], j: u32) -> [Complex64; 4] {
    let [p, p1, p2, p3] = *d;
    let j = j as i32;
    let jf = j as f64;
    [
        pw(p, j),
        jf * pw(p, j - 1) * p1,
        jf * (jf - 1.0) * pw(p, j - 2) * p1 * p1 + jf * pw(p, j - 1) * p2,
        jf * (jf - 1.0) * (jf - 2.0) * pw(p, j - 3) * p1 * p1 * p1
            + 3.0 * jf * (jf - 1.0) * pw(p, j - 2) * p1 * p2
            + jf * pw(p, j - 1) * p3,
    ]
}

/// `[g, g', g'', g''']` for `g = 1 / (P - c)`.
fn inverse_derivs(d: &[Complex64; 4], c: Complex64) -> [Complex64; 4] {
    let [p, p1, p2, p3] = *d;
    let g = 1.0 / (p - c);
    let (g2, g3) = (g * g, g * g * g);
    [
        g,
        -g2 * p1,
        2.0 * g3 * p1 * p1 - g2 * p2,
        -6.0 * g3 * g * p1 * p1 * p1 + 6.0 * g3 * p1 * p2 - g2 * p3,
    ]
}

/// Leibniz rule up to the third derivative.
fn product_derivs(f: &[Complex64; 4], g: &[Complex64; 4]) -> [Complex64; 4] {
    [
        f[0] * g[0],
        f[1] * g[0] + f[0] * g[1],
        f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2],
        f[3] * g[0] + 3.0 * f[2] * g[1] + 3.0 * f[1] * g[2] + f[0] * g[3],
    ]
}

/// Derivatives `0..=3` of every basis function at `z`.
pub fn basis_derivs(spec: &PotentialSpec, basis: &[BasisFn], z: Complex64) -> Result<Vec<[Complex64; 4]>> {
    let t = &spec.torus;
    let mut shifted: [Option<[Complex64; 4]>; 4] = [None; 4];
    let mut get = |k: usize| -> Result<[Complex64; 4]> {
        if let Some(v) = shifted[k] {
            return Ok(v);
        }
        let v = t.wp_derivs(z + t.half_period(k))?;
        shifted[k] = Some(v);
        Ok(v)
    };
    let mut out = Vec::with_capacity(basis.len());
    for f in basis {
        out.push(match *f {
            BasisFn::One => [ONE, ZERO, ZERO, ZERO],
            BasisFn::WpPow { k, j } => power_derivs(&get(k)?, j),
            BasisFn::InvPole => {
                let p = spec.p().expect("pole term only for GLE");
                inverse_derivs(&get(0)?, t.wp(p, 0)?)
            }
            BasisFn::ShiftedPole { k, m } => {
                let p = spec.p().expect("pole term only for GLE");
                let y = get(k)?;
                let big_y = t.wp(p + t.half_period(k), 0)?;
                product_derivs(&power_derivs(&y, m), &inverse_derivs(&y, big_y))
            }
        });
    }
    Ok(out)
}

/// How the nullspace vector is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Largest-magnitude coefficient equals 1.
    MaxAbs,
    /// The coefficient with this basis index equals 1. Keeps `W^2`
    /// meromorphic in the parameter.
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducibility {
    CompletelyReducible,
    NotCompletelyReducible,
}

#[derive(Debug, Clone)]
pub struct EvenSolution {
    pub spec: PotentialSpec,
    pub basis: Vec<BasisFn>,
    pub coeffs: Vec<Complex64>,
    /// `W^2`, averaged over the validation points.
    pub wsq: Complex64,
    /// Principal square root of `wsq`.
    pub w: Complex64,
    /// Relative collocation residual at the validation points.
    pub quality: f64,
    /// `max |W^2(z) - wsq| / wsq_scale` over the validation points.
    pub wsq_spread: f64,
    /// Magnitude of the individual terms of `W^2`, used for relative tests.
    pub wsq_scale: f64,
    /// Ratio of the two smallest singular values (infinite for `dim = 1`).
    pub sv_gap: f64,
}

/// Points on two circles in fractional coordinates, kept away from the
/// singular set. The circles are not symmetric under `z -> -z`.
fn sample_points(spec: &PotentialSpec, count: usize, circles: &[((f64, f64), f64)]) -> Result<Vec<Complex64>> {
    let t = &spec.torus;
    let clearance = 0.05 * t.tau.im.min(1.0);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut pts = Vec::with_capacity(count);
    let mut i = 0usize;
    while pts.len() < count {
        if i > 200 * count + 1000 {
            return Err(Error::PoleProximity {
                z: t.from_coords(circles[0].0 .0, circles[0].0 .1),
                dist: clearance,
            });
        }
        let ((cx, cy), r) = circles[i % circles.len()];
        let theta = 2.0 * PI * (i as f64 * golden).fract();
        i += 1;
        let z = t.from_coords(cx + r * theta.cos(), cy + r * theta.sin());
        let near_lattice = t.half_period_distance(z) < clearance;
        let near_p = spec.singular_distance(z) < clearance;
        if near_lattice || near_p {
            continue;
        }
        pts.push(z);
    }
    Ok(pts)
}

/// Extra collocation points around `omega_k/2` when `p` is close to it.
/// The zeros of `Phi` that approach the half period live at the scale
/// `|p - omega_k/2|`, which the cell-scale circles cannot resolve.
fn near_cluster_points(spec: &PotentialSpec, per_circle: usize) -> Vec<Complex64> {
    let Some(p) = spec.p() else { return Vec::new() };
    let t = &spec.torus;
    let (k, dist) = t.nearest_half_period(p);
    if dist >= SHIFTED_POLE_RADIUS {
        return Vec::new();
    }
    let h = t.half_period(k);
    let delta = t.reduce_centered(p - h).0;
    let mut out = Vec::new();
    for (scale, phase) in NEAR_CLUSTER_CIRCLES {
        let r = scale * delta.norm();
        if r > 0.5 * SHIFTED_POLE_RADIUS.max(dist) {
            continue;
        }
        for i in 0..per_circle {
            let theta = phase + 2.0 * PI * i as f64 / per_circle as f64;
            out.push(h + Complex64::from_polar(r, theta));
        }
    }
    out
}

const NEAR_CLUSTER_CIRCLES: [(f64, f64); 2] = [(2.3, 0.37), (3.7, 1.11)];

const COLLOCATION_CIRCLES: [((f64, f64), f64); 2] = [((0.24, 0.31), 0.17), ((0.66, 0.61), 0.13)];
const VALIDATION_CIRCLES: [((f64, f64), f64); 1] = [((0.41, 0.53), 0.21)];

fn apply_operator(q: Complex64, dq: Complex64, f: &[Complex64; 4]) -> Complex64 {
    f[3] - 4.0 * q * f[1] - 2.0 * dq * f[0]
}

impl EvenSolution {
    /// `[Phi, Phi', Phi'', Phi''']` at `z`.
    pub fn eval(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let d = basis_derivs(&self.spec, &self.basis, z)?;
        let mut out = [ZERO; 4];
        for (c, f) in self.coeffs.iter().zip(&d) {
            for m in 0..4 {
                out[m] += c * f[m];
            }
        }
        Ok(out)
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?[0])
    }

    pub fn torus(&self) -> &Torus {
        &self.spec.torus
    }

    /// Coefficient of a basis function, zero if absent.
    pub fn coeff(&self, f: BasisFn) -> Complex64 {
        self.basis
            .iter()
            .position(|&b| b == f)
            .map(|i| self.coeffs[i])
            .unwrap_or(ZERO)
    }

    /// `W^2` at a single point, with the magnitude of its terms.
    pub fn wsq_at(&self, z: Complex64) -> Result<(Complex64, f64)> {
        let [f, f1, f2, _] = self.eval(z)?;
        let q = self.spec.eval(z)?;
        let a = f1 * f1;
        let b = 2.0 * f * f2;
        let c = 4.0 * q * f * f;
        let scale = a.norm().max(b.norm()).max(c.norm());
        Ok((a - b + c, scale))
    }

    pub fn reducibility(&self) -> Reducibility {
        if self.wsq.norm() > TOL_BRANCH * self.wsq_scale {
            Reducibility::CompletelyReducible
        } else {
            Reducibility::NotCompletelyReducible
        }
    }

    /// A copy rescaled so that coefficient `index` equals 1.
    pub fn renormalized(&self, index: usize) -> EvenSolution {
        let lam = 1.0 / self.coeffs[index];
        let mut s = self.clone();
        for c in &mut s.coeffs {
            *c *= lam;
        }
        s.wsq *= lam * lam;
        s.w = s.wsq.sqrt();
        s.wsq_scale *= lam.norm_sqr();
        s
    }
}

pub fn solve_even(spec: &PotentialSpec) -> Result<EvenSolution> {
    solve_even_with(spec, Normalization::MaxAbs)
}

pub fn solve_even_with(spec: &PotentialSpec, norm: Normalization) -> Result<EvenSolution> {
    let basis = ansatz_basis(spec);
    let dim = basis.len();
    let (mut coeffs, sv_gap) = if dim == 1 {
        (vec![ONE], f64::INFINITY)
    } else {
        nullspace(spec, &basis)?
    };

    let index = match norm {
        Normalization::MaxAbs => max_abs_index(&coeffs),
        Normalization::Index(i) => {
            if i >= dim {
                return Err(Error::InvalidInput(format!("normalization index {i} >= dim {dim}")));
            }
            i
        }
    };
    let lam = 1.0 / coeffs[index];
    for c in &mut coeffs {
        *c *= lam;
    }
    coeffs[index] = ONE;

    let mut sol = EvenSolution {
        spec: spec.clone(),
        basis,
        coeffs,
        wsq: ZERO,
        w: ZERO,
        quality: 0.0,
        wsq_spread: 0.0,
        wsq_scale: 0.0,
        sv_gap,
    };
    validate(&mut sol)?;
    Ok(sol)
}

fn max_abs_index(v: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() {
            best = i;
        }
    }
    best
}

fn nullspace(spec: &PotentialSpec, basis: &[BasisFn]) -> Result<(Vec<Complex64>, f64)> {
    let dim = basis.len();
    let mut pts = sample_points(spec, 3 * dim, &COLLOCATION_CIRCLES)?;
    pts.extend(near_cluster_points(spec, 2 * dim + 2));
    let mut m = DMatrix::<Complex64>::zeros(pts.len(), dim);
    for (r, &z) in pts.iter().enumerate() {
        let (q, dq) = spec.eval_with_derivative(z)?;
        let d = basis_derivs(spec, basis, z)?;
        let mut row_max: f64 = 0.0;
        for (j, f) in d.iter().enumerate() {
            let v = apply_operator(q, dq, f);
            m[(r, j)] = v;
            row_max = row_max.max(v.norm());
        }
        if row_max > 0.0 {
            for j in 0..dim {
                m[(r, j)] /= row_max;
            }
        }
    }
    let mut col_scale = vec![1.0; dim];
    for j in 0..dim {
        let n = m.column(j).norm();
        if n > 0.0 {
            col_scale[j] = n;
            for r in 0..pts.len() {
                m[(r, j)] /= n;
            }
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap_or(std::cmp::Ordering::Equal));
    let (smin, snext) = (sv[order[0]], sv[order[1]]);
    let gap = if smin > 0.0 { snext / smin } else { f64::INFINITY };
    if !(gap >= MIN_SV_GAP) {
        return Err(Error::DegenerateNullspace { gap });
    }
    let row = v_t.row(order[0]);
    let coeffs = (0..dim).map(|j| row[j].conj() / col_scale[j]).collect();
    Ok((coeffs, gap))
}

fn validate(sol: &mut EvenSolution) -> Result<()> {
    let spec = &sol.spec;
    let pts = sample_points(spec, N_VALIDATION, &VALIDATION_CIRCLES)?;
    let mut quality: f64 = 0.0;
    let mut values = Vec::with_capacity(pts.len());
    let mut scales = Vec::with_capacity(pts.len());
    for &z in &pts {
        let (q, dq) = spec.eval_with_derivative(z)?;
        let d = basis_derivs(spec, &sol.basis, z)?;
        let mut num = ZERO;
        let mut den = 0.0;
        for (c, f) in sol.coeffs.iter().zip(&d) {
            let v = c * apply_operator(q, dq, f);
            num += v;
            den += v.norm();
        }
        if den > 0.0 {
            quality = quality.max(num.norm() / den);
        }
        let (w2, s) = sol.wsq_at(z)?;
        values.push(w2);
        scales.push(s);
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let scale = scales[scales.len() / 2];
    let spread = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max) / scale.max(f64::MIN_POSITIVE);
    sol.quality = quality;
    sol.wsq = mean;
    sol.w = mean.sqrt();
    sol.wsq_scale = scale;
    sol.wsq_spread = spread;
    if spread > ZDEP_LIMIT {
        return Err(Error::ZDependence { spread });
    }
    Ok(())
}

/// Recomputes `W^2 = Phi'^2 - 2 Phi Phi'' + 4 q Phi^2` at fresh points.
pub fn wronskian_sq(sol: &EvenSolution) -> Result<Complex64> {
    let mut s = sol.clone();
    validate(&mut s)?;
    Ok(s.wsq)
}

pub fn classify_reducibility(sol: &EvenSolution) -> Reducibility {
    sol.reducibility()
}

/// Builds the potential for a parameter value: `B` for H, `A` for GLE.
pub fn spec_at(t: &std::sync::Arc<Torus>, n: MultiIndex, p: Option<Complex64>, param: Complex64) -> Result<PotentialSpec> {
    match p {
        None => Ok(PotentialSpec::h(t.clone(), n, param)),
        Some(p) => PotentialSpec::gle(t.clone(), n, p, param),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    #[serde(with = "crate::report::complex")]
    pub param: Complex64,
    /// `|W^2| / scale` at the polished point.
    pub residual: f64,
    pub converged: bool,
}

/// Zeros of `param -> W^2(param)` inside the disc `|param - center| < radius`.
///
/// Seeds are the local minima of `|W^2| / scale` on a `grid x grid` lattice;
/// each is polished by Newton on `W^2` under a fixed-index normalization,
/// which makes it a meromorphic function of the parameter.
pub fn find_branch_points(
    t: &std::sync::Arc<Torus>,
    n: MultiIndex,
    p: Option<Complex64>,
    center: Complex64,
    radius: f64,
    grid: usize,
) -> Result<Vec<BranchPoint>> {
    if !(radius > 0.0) || grid < 3 {
        return Err(Error::InvalidInput("branch search needs radius > 0 and grid >= 3".into()));
    }
    let step = 2.0 * radius / (grid - 1) as f64;
    let node = |i: usize, j: usize| center + Complex64::new(-radius + i as f64 * step, -radius + j as f64 * step);
    let mut vals = vec![f64::INFINITY; grid * grid];
    for i in 0..grid {
        for j in 0..grid {
            if let Ok(sol) = spec_at(t, n, p, node(i, j)).and_then(|s| solve_even(&s)) {
                vals[i * grid + j] = sol.wsq.norm() / sol.wsq_scale;
            }
        }
    }
    let mut seeds = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let v = vals[i * grid + j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= grid as i64 || b >= grid as i64 {
                        continue;
                    }
                    if vals[a as usize * grid + b as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(node(i, j));
            }
        }
    }

    let mut found: Vec<BranchPoint> = Vec::new();
    for seed in seeds {
        let bp = match polish_branch(t, n, p, seed, step) {
            Ok(bp) => bp,
            Err(_) => continue,
        };
        if (bp.param - center).norm() > radius * (1.0 + 1e-9) {
            continue;
        }
        if bp.residual > 1e-6 && !bp.converged {
            continue;
        }
        if found.iter().any(|f| (f.param - bp.param).norm() < 1e-6 * (1.0 + bp.param.norm())) {
            continue;
        }
        found.push(bp);
    }
    found.sort_by(|a, b| {
        (a.param.re, a.param.im)
            .partial_cmp(&(b.param.re, b.param.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

fn polish_branch(
    t: &std::sync::Arc<Torus>,
    n: MultiIndex,
    p: Option<Complex64>,
    seed: Complex64,
    step: f64,
) -> Result<BranchPoint> {
    let first = solve_even(&spec_at(t, n, p, seed)?)?;
    let index = max_abs_index(&first.coeffs);
    let g = |x: Complex64| -> Result<Complex64> {
        Ok(solve_even_with(&spec_at(t, n, p, x)?, Normalization::Index(index))?.wsq)
    };
    let mut x = seed;
    let mut converged = false;
    for _ in 0..80 {
        let h = 1e-5 * (1.0 + x.norm()).min(step.max(1e-3));
        let gx = g(x)?;
        if gx.norm() == 0.0 {
            converged = true;
            break;
        }
        let dg = (g(x + h)? - g(x - h)?) / (2.0 * h);
        if dg.norm() == 0.0 {
            break;
        }
        let mut dx = gx / dg;
        if dx.norm() > step {
            dx *= step / dx.norm();
        }
        x -= dx;
        if dx.norm() < 1e-13 * (1.0 + x.norm()) {
            converged = true;
            break;
        }
    }
    let sol = solve_even(&spec_at(t, n, p, x)?)?;
    let residual = sol.wsq.norm() / sol.wsq_scale;
    Ok(BranchPoint {
        param: x,
        residual,
        converged: converged && residual < TOL_BRANCH,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn torus(tau: Complex64) -> Arc<Torus> {
        Arc::new(Torus::new(tau).unwrap())
    }

    #[test]
    fn basis_dimension() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([1, 2, 0, 1]);
        assert_eq!(ansatz_basis(&PotentialSpec::h(t.clone(), n, ONE)).len(), 5);
        let g = PotentialSpec::gle(t, n, cx(0.2, 0.3), ONE).unwrap();
        assert_eq!(ansatz_basis(&g).len(), 6);
    }

    #[test]
    fn basis_derivatives_are_consistent() {
        let t = torus(cx(0.2, 1.3));
        let spec = PotentialSpec::gle(t, MultiIndex::new([2, 1, 0, 0]), cx(0.2, 0.3), cx(0.5, 0.1)).unwrap();
        let basis = ansatz_basis(&spec);
        let z = cx(0.31, 0.44);
        let h = 1e-4;
        let d0 = basis_derivs(&spec, &basis, z).unwrap();
        let dp = basis_derivs(&spec, &basis, z + h).unwrap();
        let dm = basis_derivs(&spec, &basis, z - h).unwrap();
        for i in 0..basis.len() {
            for m in 0..3 {
                let fd = (dp[i][m] - dm[i][m]) / (2.0 * h);
                let tol = 1e-5 * d0[i][m + 1].norm().max(1.0);
                assert!((fd - d0[i][m + 1]).norm() < tol, "basis {i} order {m}");
            }
        }
    }

    #[test]
    fn lame_one_is_wp_minus_b() {
        let t = torus(cx(0.2, 1.3));
        let b = cx(0.7, -0.4);
        let sol = solve_even(&PotentialSpec::h(t.clone(), MultiIndex::new([1, 0, 0, 0]), b)).unwrap();
        let ratio = sol.coeffs[0] / sol.coeffs[1];
        assert!((ratio + b).norm() < 1e-8 * b.norm());
        let s = sol.renormalized(1);
        let expected = 4.0 * b * b * b - t.g2 * b - t.g3;
        assert!((s.wsq - expected).norm() < 1e-7 * expected.norm());
        assert!(sol.quality < TOL_ODE);
    }

    #[test]
    fn constant_solution_for_trivial_index() {
        let t = torus(cx(0.2, 1.3));
        let b = cx(1.5, 0.5);
        let sol = solve_even(&PotentialSpec::h(t, MultiIndex::zero(), b)).unwrap();
        assert_eq!(sol.coeffs.len(), 1);
        assert!((sol.wsq - 4.0 * b).norm() < 1e-12);
    }

    #[test]
    fn lame_one_branch_at_half_period_values() {
        let t = torus(cx(0.2, 1.3));
        for k in 1..4 {
            let sol = solve_even(&PotentialSpec::h(t.clone(), MultiIndex::new([1, 0, 0, 0]), t.e_k(k))).unwrap();
            assert_eq!(sol.reducibility(), Reducibility::NotCompletelyReducible, "k = {k}");
        }
        let sol = solve_even(&PotentialSpec::h(t.clone(), MultiIndex::new([1, 0, 0, 0]), t.e_k(2) + 1.0)).unwrap();
        assert_eq!(sol.reducibility(), Reducibility::CompletelyReducible);
    }

    #[test]
    fn gle_solution_is_even_and_accurate() {
        let t = torus(cx(0.1, 1.1));
        for n in [[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [2, 0, 0, 0]] {
            let spec = PotentialSpec::gle(t.clone(), MultiIndex::new(n), cx(0.23, 0.37), cx(0.8, -0.6)).unwrap();
            let sol = solve_even(&spec).unwrap();
            assert!(sol.quality < TOL_ODE, "{n:?}: {}", sol.quality);
            assert!(sol.wsq_spread < 1e-7, "{n:?}: {}", sol.wsq_spread);
            for z in [cx(0.13, 0.27), cx(0.44, 0.8)] {
                let (a, b) = (sol.phi(z).unwrap(), sol.phi(-z).unwrap());
                assert!((a - b).norm() < 1e-8 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn scaling_multiplies_wsq_by_square() {
        let t = torus(cx(0.1, 1.1));
        let spec = PotentialSpec::gle(t, MultiIndex::new([1, 0, 0, 0]), cx(0.23, 0.37), cx(0.8, -0.6)).unwrap();
        let sol = solve_even(&spec).unwrap();
        let r = sol.renormalized(2);
        let lam = r.coeffs[0] / sol.coeffs[0];
        assert!((r.wsq - lam * lam * sol.wsq).norm() < 1e-10 * r.wsq.norm());
        assert_eq!(r.reducibility(), sol.reducibility());
    }

    #[test]
    fn trivial_index_branch_point_is_zero() {
        let t = torus(cx(0.2, 1.3));
        let bps = find_branch_points(&t, MultiIndex::zero(), None, cx(0.1, 0.1), 1.0, 7).unwrap();
        assert_eq!(bps.len(), 1);
        assert!(bps[0].param.norm() < 1e-8);
    }
}
