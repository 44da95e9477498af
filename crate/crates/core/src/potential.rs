//! The two potential families.
//!
//! `H(n, B, tau)`: `y'' = [sum n_k(n_k+1) wp(z + omega_k/2) + B] y`.
//!
//! `GLE(n, p, A, tau)`: the same Treibich–Verdier part plus apparent
//! singularities at `+-p`,
//! `3/4 (wp(z+p) + wp(z-p)) + A (zeta(z+p) - zeta(z-p)) + B`,
//! with `B` slaved to `A` so that `+-p` are apparent.
//!
//! Throughout, [`PotentialSpec::eval`] returns the full coefficient `q(z)` of
//! `y'' = q(z) y`, i.e. including the constant `B`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::{Torus, POINT_EQ_TOL};
use crate::error::{Error, Result};

/// Exponents `(n_0, n_1, n_2, n_3)` at the four half periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex {
    pub n: [u32; 4],
}

impl MultiIndex {
    pub fn new(n: [u32; 4]) -> MultiIndex {
        MultiIndex { n }
    }

    pub fn zero() -> MultiIndex {
        MultiIndex { n: [0; 4] }
    }

    /// `N_hat = sum n_k`, the divisor size for the H family.
    pub fn n_hat(&self) -> usize {
        self.n.iter().map(|&v| v as usize).sum()
    }

    /// `N = N_hat + 1`, the divisor size for the GLE family.
    pub fn big_n(&self) -> usize {
        self.n_hat() + 1
    }

    /// `sum n_k (n_k + 1)`.
    pub fn weight(&self) -> u32 {
        self.n.iter().map(|&v| v * (v + 1)).sum()
    }

    /// `n_k^+` or `n_k^-`. `n_k^-` with `n_k = 0` is the same equation as
    /// `n_k = 0` (the exponents `-1, 0` and `0, 1` give identical
    /// potentials), so it is returned unchanged.
    pub fn shift(&self, k: usize, up: bool) -> MultiIndex {
        let mut n = self.n;
        if up {
            n[k] += 1;
        } else {
            n[k] = n[k].saturating_sub(1);
        }
        MultiIndex { n }
    }

    /// Theorem-level degree of `sigma_n` (H family).
    pub fn h_degree(&self) -> u32 {
        self.weight() / 2
    }

    /// Theorem-level degree of `sigma_{n,p}` (GLE family).
    pub fn gle_degree(&self) -> u32 {
        self.weight() + 1
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c, d] = self.n;
        write!(f, "({a},{b},{c},{d})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    H,
    Gle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    H { b: Complex64 },
    Gle { p: Complex64, a: Complex64, b: Complex64 },
}

/// A local exponent pair `(rho_1, rho_2)` at a singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExponents {
    pub at: Complex64,
    pub rho: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub torus: Arc<Torus>,
    pub n: MultiIndex,
    pub family: Family,
    pub exponents: Vec<LocalExponents>,
}

fn half_period_exponents(t: &Torus, n: &MultiIndex) -> Vec<LocalExponents> {
    (0..4)
        .map(|k| LocalExponents {
            at: t.half_period(k),
            rho: (-(n.n[k] as f64), n.n[k] as f64 + 1.0),
        })
        .collect()
}

/// Rejects `p` in `E_tau[2]`.
pub fn check_p(t: &Torus, p: Complex64) -> Result<()> {
    if !p.is_finite() || t.half_period_distance(p) < POINT_EQ_TOL {
        return Err(Error::HalfPeriodP(p));
    }
    Ok(())
}

/// `sum n_k (n_k+1) wp(z + omega_k/2)`.
pub fn tv_part(t: &Torus, n: &MultiIndex, z: Complex64) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..4 {
        let w = n.n[k] * (n.n[k] + 1);
        if w > 0 {
            s += t.wp(z + t.half_period(k), 0)? * (w as f64);
        }
    }
    Ok(s)
}

/// Accessory parameter `B` forced by apparentness at `+-p`.
pub fn b_from_a(t: &Torus, n: &MultiIndex, p: Complex64, a: Complex64) -> Result<Complex64> {
    check_p(t, p)?;
    let two_p = 2.0 * p;
    Ok(a * a - t.zeta(two_p)? * a - 0.75 * t.wp(two_p, 0)? - tv_part(t, n, p)?)
}

impl PotentialSpec {
    pub fn h(torus: Arc<Torus>, n: MultiIndex, b: Complex64) -> PotentialSpec {
        let exponents = half_period_exponents(&torus, &n);
        PotentialSpec {
            torus,
            n,
            family: Family::H { b },
            exponents,
        }
    }

    pub fn gle(torus: Arc<Torus>, n: MultiIndex, p: Complex64, a: Complex64) -> Result<PotentialSpec> {
        let b = b_from_a(&torus, &n, p, a)?;
        let mut exponents = half_period_exponents(&torus, &n);
        for at in [p, -p] {
            exponents.push(LocalExponents { at, rho: (-0.5, 1.5) });
        }
        Ok(PotentialSpec {
            torus,
            n,
            family: Family::Gle { p, a, b },
            exponents,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::H { .. } => FamilyKind::H,
            Family::Gle { .. } => FamilyKind::Gle,
        }
    }

    pub fn b(&self) -> Complex64 {
        match self.family {
            Family::H { b } | Family::Gle { b, .. } => b,
        }
    }

    pub fn p(&self) -> Option<Complex64> {
        match self.family {
            Family::Gle { p, .. } => Some(p),
            Family::H { .. } => None,
        }
    }

    pub fn a(&self) -> Option<Complex64> {
        match self.family {
            Family::Gle { a, .. } => Some(a),
            Family::H { .. } => None,
        }
    }

    /// Number of divisor points: `N` (GLE) or `N_hat` (H).
    pub fn divisor_size(&self) -> usize {
        match self.family {
            Family::H { .. } => self.n.n_hat(),
            Family::Gle { .. } => self.n.big_n(),
        }
    }

    /// Formula degree of the addition map for this family and `n`.
    pub fn formula_degree(&self) -> u32 {
        match self.family {
            Family::H { .. } => self.n.h_degree(),
            Family::Gle { .. } => self.n.gle_degree(),
        }
    }

    /// All singular points of the potential (mod the lattice).
    pub fn singularities(&self) -> Vec<Complex64> {
        let t = &self.torus;
        let mut s: Vec<Complex64> = (0..4)
            .filter(|&k| self.n.n[k] > 0)
            .map(|k| t.half_period(k))
            .collect();
        if let Some(p) = self.p() {
            s.push(p);
            s.push(-p);
        }
        s
    }

    /// Torus distance from `z` to the nearest singular point.
    pub fn singular_distance(&self, z: Complex64) -> f64 {
        self.singularities()
            .iter()
            .map(|&s| self.torus.distance(z, s))
            .fold(f64::INFINITY, f64::min)
    }

    /// `q(z)` in `y'' = q(z) y`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_derivative(z)?.0)
    }

    /// `(q(z), q'(z))`.
    pub fn eval_with_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let t = &self.torus;
        let mut q = Complex64::new(0.0, 0.0);
        let mut dq = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            let w = self.n.n[k] * (self.n.n[k] + 1);
            if w > 0 {
                let (v, dv) = t.wp_pair(z + t.half_period(k))?;
                q += v * (w as f64);
                dq += dv * (w as f64);
            }
        }
        match self.family {
            Family::H { b } => q += b,
            Family::Gle { p, a, b } if self.pair_series_applies(z) => {
                let (h_idx, _) = t.nearest_half_period(p);
                let h = t.half_period(h_idx);
                let delta = t.reduce_centered(p - h).0;
                // z - p = u - delta - L with u = z + h and L = 2(p - delta) a
                // lattice vector, so zeta(z + p) - zeta(z - p) gains eta(L).
                let (lx, ly) = t.coords(2.0 * (p - delta));
                let eta_l = t.eta[0] * lx.round() + t.eta[1] * ly.round();
                let w = (self.n.n[h_idx] * (self.n.n[h_idx] + 1)) as f64;
                let (v, dv) = t.wp_pair(z + h)?;
                // The pair series includes the n_k (n_k + 1) wp(u) term.
                q -= v * w;
                dq -= dv * w;
                let (g, dg) = pair_series(t, z + h, delta, a, w)?;
                q += g + a * eta_l + b;
                dq += dg;
            }
            Family::Gle { p, a, b } => {
                let (wp_plus, dwp_plus) = t.wp_pair(z + p)?;
                let (wp_minus, dwp_minus) = t.wp_pair(z - p)?;
                let zeta_diff = t.zeta(z + p)? - t.zeta(z - p)?;
                q += 0.75 * (wp_plus + wp_minus) + a * zeta_diff + b;
                dq += 0.75 * (dwp_plus + dwp_minus) - a * (wp_plus - wp_minus);
            }
        }
        Ok((q, dq))
    }
}

impl PotentialSpec {
    /// True when `p` is close to a half period `h` and `z + h` is far from
    /// the lattice compared with `|p - h|`: the pair terms then nearly cancel
    /// against `n_k (n_k + 1) wp(z + h)` and are summed as a series instead.
    fn pair_series_applies(&self, z: Complex64) -> bool {
        let Some(p) = self.p() else { return false };
        let t = &self.torus;
        let (k, dist) = t.nearest_half_period(p);
        dist < PAIR_SERIES_RADIUS && dist < PAIR_SERIES_RATIO * t.lattice_distance(z + t.half_period(k))
    }
}

const PAIR_SERIES_RADIUS: f64 = 0.1;
const PAIR_SERIES_RATIO: f64 = 0.25;
const PAIR_SERIES_MAX_TERMS: usize = 60;

/// `w wp(u) + 3/4 (wp(u + d) + wp(u - d)) + A (zeta(u + d) - zeta(u - d))`
/// and its `u`-derivative, from the Taylor series
/// `sum_m d^{2m} / (2m)! (3/2 - 2 A d / (2m+1)) wp^{(2m)}(u)`.
/// Each `wp^{(2m)}` is a polynomial in `wp`, built by
/// `P_{m+1} = P_m'' wp'^2 + P_m' wp''`.
fn pair_series(t: &Torus, u: Complex64, d: Complex64, a: Complex64, w: f64) -> Result<(Complex64, Complex64)> {
    let (x, y) = t.wp_pair(u)?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    // wp'^2 and wp'' as polynomials in wp.
    let cubic = [-t.g3, -t.g2, zero, 4.0 * one];
    let quad = [-t.g2 / 2.0, zero, 6.0 * one];
    let ad = a * d;
    // Scaled polynomial `d^{2m} / (2m)! P_m`.
    let mut poly = vec![zero, one];
    let (mut g, mut dg) = (zero, zero);
    let mut small = 0;
    for m in 0..PAIR_SERIES_MAX_TERMS {
        let mf = m as f64;
        let mut coef = 1.5 - 2.0 * ad / (2.0 * mf + 1.0);
        if m == 0 {
            coef += w;
        }
        let (pv, pd) = crate::poly::eval_with_derivative(&poly, x);
        let term = coef * pv;
        g += term;
        dg += coef * pd * y;
        if term.norm() <= 1e-17 * (g.norm() + 1.0) {
            small += 1;
            if small == 2 {
                return Ok((g, dg));
            }
        } else {
            small = 0;
        }
        let d1: Vec<Complex64> = (1..poly.len()).map(|i| poly[i] * i as f64).collect();
        let d2: Vec<Complex64> = (1..d1.len()).map(|i| d1[i] * i as f64).collect();
        let mut next = crate::poly::mul(&d2, &cubic);
        crate::poly::add_into(&mut next, &crate::poly::mul(&d1, &quad), one);
        let scale = d * d / ((2.0 * mf + 1.0) * (2.0 * mf + 2.0));
        poly = next.into_iter().map(|c| c * scale).collect();
    }
    Err(Error::NonConvergentQuadrature)
}

/// `D(z; a, p) = sum zeta(z - a_j) - sum n_k zeta(z - omega_k/2)
/// [- 1/2 (zeta(z+p) + zeta(z-p))]`, the logarithmic derivative of the
/// Hermite–Halphen ansatz without its exponential factor.
pub fn diag_d(
    t: &Torus,
    n: &MultiIndex,
    a: &[Complex64],
    p: Option<Complex64>,
    z: Complex64,
) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &aj in a {
        s += t.zeta(z - aj)?;
    }
    for k in 0..4 {
        if n.n[k] > 0 {
            s -= t.zeta(z - t.half_period(k))? * (n.n[k] as f64);
        }
    }
    if let Some(p) = p {
        s -= 0.5 * (t.zeta(z + p)? + t.zeta(z - p)?);
    }
    Ok(s)
}

/// `E = D'`.
pub fn diag_e(
    t: &Torus,
    n: &MultiIndex,
    a: &[Complex64],
    p: Option<Complex64>,
    z: Complex64,
) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &aj in a {
        s -= t.wp(z - aj, 0)?;
    }
    for k in 0..4 {
        if n.n[k] > 0 {
            s += t.wp(z - t.half_period(k), 0)? * (n.n[k] as f64);
        }
    }
    if let Some(p) = p {
        s += 0.5 * (t.wp(z + p, 0)? + t.wp(z - p, 0)?);
    }
    Ok(s)
}

/// Relative residual of `q = (c + D)^2 + E` at `z`.
pub fn log_derivative_residual(
    spec: &PotentialSpec,
    a: &[Complex64],
    c: Complex64,
    z: Complex64,
) -> Result<f64> {
    let t = &spec.torus;
    let q = spec.eval(z)?;
    let d = diag_d(t, &spec.n, a, spec.p(), z)?;
    let e = diag_e(t, &spec.n, a, spec.p(), z)?;
    let rhs = (c + d) * (c + d) + e;
    let scale = q.norm().max((c + d).norm_sqr()).max(e.norm()).max(1.0);
    Ok((q - rhs).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::LatticeOracle;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn torus(tau: Complex64) -> Arc<Torus> {
        Arc::new(Torus::new(tau).unwrap())
    }

    #[test]
    fn multi_index_counts() {
        let n = MultiIndex::new([1, 2, 0, 0]);
        assert_eq!(n.n_hat(), 3);
        assert_eq!(n.big_n(), 4);
        assert_eq!(n.weight(), 8);
        assert_eq!(n.shift(1, false).n, [1, 1, 0, 0]);
        assert_eq!(n.shift(3, false).n, [1, 2, 0, 0]);
        assert_eq!((n.h_degree(), n.gle_degree()), (4, 9));
    }

    #[test]
    fn pair_series_matches_direct_sum() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([1, 1, 0, 0]);
        let mut used = 0;
        for k in 0..4 {
            // Lattice shifts of p exercise the eta correction.
            for shift in [cx(0.0, 0.0), cx(1.0, 0.0), t.tau] {
                let p = t.half_period(k) + cx(0.05, 0.03) + shift;
                let spec = PotentialSpec::gle(t.clone(), n, p, cx(-3.0, 1.0)).unwrap();
                for z in [cx(0.37, 0.21), cx(0.71, 0.93), cx(0.13, 0.55)] {
                    if !spec.pair_series_applies(z) {
                        continue;
                    }
                    let (q, dq) = spec.eval_with_derivative(z).unwrap();
                    let mut qd = tv_part(&t, &n, z).unwrap() + spec.b();
                    qd += 0.75 * (t.wp(z + p, 0).unwrap() + t.wp(z - p, 0).unwrap());
                    qd += spec.a().unwrap() * (t.zeta(z + p).unwrap() - t.zeta(z - p).unwrap());
                    assert!((q - qd).norm() < 1e-11 * qd.norm().max(1.0), "k={k} {q} {qd}");
                    let h = 1e-5;
                    let fd = (spec.eval(z + h).unwrap() - spec.eval(z - h).unwrap()) / (2.0 * h);
                    assert!((dq - fd).norm() < 1e-6 * dq.norm().max(1.0), "k={k} {dq} {fd}");
                    used += 1;
                }
            }
        }
        assert!(used >= 24, "{used}");
    }

    #[test]
    fn b_for_trivial_index() {
        let t = torus(cx(0.2, 1.3));
        let p = cx(0.17, 0.31);
        let b = b_from_a(&t, &MultiIndex::zero(), p, cx(0.0, 0.0)).unwrap();
        let expected = -0.75 * t.wp(2.0 * p, 0).unwrap();
        assert!((b - expected).norm() < 1e-14 * expected.norm());
    }

    #[test]
    fn b_is_monic_quadratic() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([1, 0, 1, 0]);
        let p = cx(0.17, 0.31);
        let z2p = t.zeta(2.0 * p).unwrap();
        let k = |a: Complex64| b_from_a(&t, &n, p, a).unwrap() - a * a + z2p * a;
        let k0 = k(cx(0.0, 0.0));
        for a in [cx(1.0, 2.0), cx(-3.0, 0.5)] {
            assert!((k(a) - k0).norm() < 1e-10 * (1.0 + k0.norm()) * (1.0 + a.norm_sqr()));
        }
    }

    #[test]
    fn b_matches_lattice_sums() {
        let tau = cx(0.1, 0.95);
        let t = torus(tau);
        let o = LatticeOracle::new(tau, 150);
        let n = MultiIndex::new([1, 1, 0, 2]);
        let (p, a) = (cx(0.23, 0.11), cx(0.7, -1.3));
        let mut expected = a * a - o.zeta(2.0 * p) * a - 0.75 * o.wp(2.0 * p);
        for k in 0..4 {
            let w = (n.n[k] * (n.n[k] + 1)) as f64;
            if w > 0.0 {
                expected -= w * o.wp(p + t.half_period(k));
            }
        }
        let b = b_from_a(&t, &n, p, a).unwrap();
        assert!((b - expected).norm() < 1e-9 * expected.norm().max(1.0));
    }

    #[test]
    fn half_period_p_rejected() {
        let t = torus(cx(0.0, 1.0));
        let r = PotentialSpec::gle(t.clone(), MultiIndex::zero(), t.half_period(3) + 1.0, cx(1.0, 0.0));
        assert!(matches!(r, Err(Error::HalfPeriodP(_))));
    }

    #[test]
    fn lame_one_is_two_wp() {
        let t = torus(cx(0.2, 1.3));
        let s = PotentialSpec::h(t.clone(), MultiIndex::new([1, 0, 0, 0]), cx(0.0, 0.0));
        let z = cx(0.3, 0.4);
        assert!((s.eval(z).unwrap() - 2.0 * t.wp(z, 0).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn gle_even_and_elliptic() {
        let t = torus(cx(0.2, 1.3));
        let s = PotentialSpec::gle(t.clone(), MultiIndex::new([1, 1, 0, 0]), cx(0.21, 0.37), cx(0.4, 0.9)).unwrap();
        for z in [cx(0.11, 0.23), cx(-0.4, 0.6), cx(0.33, -0.1)] {
            let v = s.eval(z).unwrap();
            let tol = 1e-10 * v.norm().max(1.0);
            assert!((s.eval(-z).unwrap() - v).norm() < tol);
            assert!((s.eval(z + 1.0).unwrap() - v).norm() < tol);
            assert!((s.eval(z + t.tau).unwrap() - v).norm() < tol);
        }
    }

    #[test]
    fn raw_p_representative_is_irrelevant() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([1, 0, 0, 0]);
        let (p, a) = (cx(0.21, 0.37), cx(0.4, 0.9));
        let s1 = PotentialSpec::gle(t.clone(), n, p, a).unwrap();
        let s2 = PotentialSpec::gle(t.clone(), n, p + 1.0 - t.tau, a).unwrap();
        let z = cx(0.1, 0.5);
        let (v1, v2) = (s1.eval(z).unwrap(), s2.eval(z).unwrap());
        assert!((v1 - v2).norm() < 1e-10 * v1.norm());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let t = torus(cx(-0.1, 1.1));
        let s = PotentialSpec::gle(t, MultiIndex::new([2, 0, 0, 1]), cx(0.27, 0.19), cx(-0.3, 0.8)).unwrap();
        let z = cx(0.13, 0.41);
        let h = 1e-5;
        let fd = (s.eval(z + h).unwrap() - s.eval(z - h).unwrap()) / (2.0 * h);
        let (_, dq) = s.eval_with_derivative(z).unwrap();
        assert!((fd - dq).norm() < 1e-5 * dq.norm().max(1.0));
    }

    #[test]
    fn double_pole_coefficients() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([0, 2, 0, 0]);
        let p = cx(0.21, 0.37);
        let s = PotentialSpec::gle(t.clone(), n, p, cx(0.4, 0.9)).unwrap();
        // Richardson on h^2 q(s + h) = c_{-2} + c_{-1} h + O(h^2).
        let lead = |at: Complex64| {
            let dir = cx(0.6, 0.8);
            let g = |h: f64| {
                let z = at + dir * h;
                (z - at) * (z - at) * s.eval(z).unwrap()
            };
            2.0 * g(5e-4) - g(1e-3)
        };
        assert!((lead(t.half_period(1)) - 6.0).norm() < 1e-4);
        assert!((lead(p) - 0.75).norm() < 1e-4);
        assert!((lead(-p) - 0.75).norm() < 1e-4);
    }

    #[test]
    fn e_is_derivative_of_d() {
        let t = torus(cx(0.2, 1.3));
        let n = MultiIndex::new([1, 0, 1, 0]);
        let a = [cx(0.3, 0.2), cx(0.1, 0.9), cx(-0.2, 0.4)];
        let p = Some(cx(0.21, 0.37));
        let z = cx(0.05, 0.61);
        let h = 1e-5;
        let fd = (diag_d(&t, &n, &a, p, z + h).unwrap() - diag_d(&t, &n, &a, p, z - h).unwrap()) / (2.0 * h);
        let e = diag_e(&t, &n, &a, p, z).unwrap();
        assert!((fd - e).norm() < 1e-5 * e.norm().max(1.0));
    }
}
