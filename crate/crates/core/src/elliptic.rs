//! Weierstrass functions on the torus `E_tau = C / (Z + Z tau)`.
//!
//! All kernels go through the Jacobi theta functions with nome
//! `q = exp(i pi tau)`. Arguments are first reduced to the centred cell
//! `{x + y tau : |x|, |y| <= 1/2}` so that the q-series converge uniformly;
//! the quasi-periodic functions are then re-expanded with their
//! transformation laws.
//!
//! Half periods follow the convention `omega_0 = 0`, `omega_1 = 1`,
//! `omega_2 = tau`, `omega_3 = 1 + tau` and `e_k = wp(omega_k / 2)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for identities that should hold to double precision.
pub const TOL_CORE: f64 = 1e-10;
/// Minimal distance to a lattice point before a pole is reported.
pub const POLE_GUARD: f64 = 1e-6;
/// Two torus points closer than this are considered equal.
pub const POINT_EQ_TOL: f64 = 1e-7;

const SERIES_EPS: f64 = 1e-18;
const MAX_TERMS: usize = 400;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Theta values at a point `v = pi z`.
#[derive(Debug, Clone, Copy)]
struct ThetaAt {
    th1: Complex64,
    th1p: Complex64,
    th2: Complex64,
    th2p: Complex64,
}

/// Lattice data of `E_tau`, fully precomputed at construction.
#[derive(Debug, Clone)]
pub struct Torus {
    pub tau: Complex64,
    /// `q = exp(i pi tau)`.
    pub q: Complex64,
    /// Full half-period doubles `omega_0..omega_3`.
    pub omega: [Complex64; 4],
    /// Quasi-periods `(eta_1, eta_2)` for the periods `1` and `tau`.
    pub eta: [Complex64; 2],
    pub eta3: Complex64,
    pub g2: Complex64,
    pub g3: Complex64,
    /// `e_k = wp(omega_k / 2)` for `k = 1, 2, 3`.
    pub e: [Complex64; 3],
    /// `q^{(n + 1/2)^2}` for the odd-index series.
    half_coeffs: Vec<Complex64>,
    th1p0: Complex64,
    th2_0: Complex64,
    th3_0: Complex64,
    th4_0: Complex64,
    /// `pi * theta_1'(0) / theta_2(0)`.
    wp_scale: Complex64,
}

impl Torus {
    pub fn new(tau: Complex64) -> Result<Torus> {
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::NonHyperbolicTau(tau));
        }
        let q = (I * PI * tau).exp();

        // |q^{(n+1/2)^2}| e^{(2n+1) pi Im(tau) / 2} bounds the terms used on
        // the centred cell; keep enough of them for 1e-18.
        let b = tau.im;
        let mut half_coeffs = Vec::new();
        for n in 0..MAX_TERMS {
            let nf = n as f64 + 0.5;
            let coef = (I * PI * tau * nf * nf).exp();
            half_coeffs.push(coef);
            let bound = (-PI * b * (nf * nf - nf - 0.25)).exp();
            if n > 2 && bound < SERIES_EPS * 1e-3 {
                break;
            }
        }

        let mut th1p0 = c(0.0);
        let mut th1ppp0 = c(0.0);
        let mut th2_0 = c(0.0);
        for (n, &cn) in half_coeffs.iter().enumerate() {
            let k = (2 * n + 1) as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            th1p0 += cn * (2.0 * sign * k);
            th1ppp0 += cn * (-2.0 * sign * k * k * k);
            th2_0 += cn * 2.0;
        }
        let mut th3_0 = c(1.0);
        let mut th4_0 = c(1.0);
        for n in 1..MAX_TERMS {
            let nf = n as f64;
            let t = (I * PI * tau * nf * nf).exp();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            th3_0 += t * 2.0;
            th4_0 += t * (2.0 * sign);
            if t.norm() < SERIES_EPS {
                break;
            }
        }

        let eta1 = -PI * PI * th1ppp0 / (3.0 * th1p0);
        let pi2_3 = PI * PI / 3.0;
        let t2 = th2_0.powu(4);
        let t3 = th3_0.powu(4);
        let t4 = th4_0.powu(4);
        let e1 = (t3 + t4) * pi2_3;
        let e2 = -(t2 + t3) * pi2_3;
        let e3 = (t2 - t4) * pi2_3;

        let mut torus = Torus {
            tau,
            q,
            omega: [c(0.0), c(1.0), tau, c(1.0) + tau],
            eta: [eta1, c(0.0)],
            eta3: c(0.0),
            g2: -4.0 * (e1 * e2 + e2 * e3 + e3 * e1),
            g3: 4.0 * e1 * e2 * e3,
            e: [e1, e2, e3],
            half_coeffs,
            th1p0,
            th2_0,
            th3_0,
            th4_0,
            wp_scale: PI * th1p0 / th2_0,
        };
        // eta_2 = zeta(tau/2) - zeta(-tau/2), evaluated straight from the
        // series at v = pi tau / 2 (still inside the convergence strip).
        let th = torus.theta(PI * tau / 2.0);
        let eta2 = eta1 * tau + 2.0 * PI * th.th1p / th.th1;
        torus.eta[1] = eta2;
        torus.eta3 = eta1 + eta2;
        Ok(torus)
    }

    /// `omega_k / 2` for `k = 0..=3`.
    pub fn half_period(&self, k: usize) -> Complex64 {
        self.omega[k] / 2.0
    }

    /// Quasi-period attached to `omega_k` (`eta_0 = 0`).
    pub fn eta_k(&self, k: usize) -> Complex64 {
        match k {
            0 => c(0.0),
            1 => self.eta[0],
            2 => self.eta[1],
            3 => self.eta3,
            _ => panic!("half-period index out of range: {k}"),
        }
    }

    /// `e_k` for `k = 1..=3`.
    pub fn e_k(&self, k: usize) -> Complex64 {
        self.e[k - 1]
    }

    /// Theta constants `(theta_1'(0), theta_2(0), theta_3(0), theta_4(0))`.
    pub fn theta_constants(&self) -> [Complex64; 4] {
        [self.th1p0, self.th2_0, self.th3_0, self.th4_0]
    }

    /// Legendre residual `tau eta_1 - eta_2 - 2 pi i`.
    pub fn legendre_residual(&self) -> Complex64 {
        self.tau * self.eta[0] - self.eta[1] - 2.0 * PI * I
    }

    /// Real coordinates `(x, y)` with `z = x + y tau`.
    pub fn coords(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.tau.im;
        let x = z.re - y * self.tau.re;
        (x, y)
    }

    pub fn from_coords(&self, x: f64, y: f64) -> Complex64 {
        c(x) + self.tau * y
    }

    /// Reduces `z` into the centred cell. Returns `(z0, m, n)` with
    /// `z = z0 + m + n tau`.
    pub fn reduce_centered(&self, z: Complex64) -> (Complex64, i64, i64) {
        let (x, y) = self.coords(z);
        let n = y.round();
        let m = (x).round();
        let z0 = z - c(m) - self.tau * n;
        (z0, m as i64, n as i64)
    }

    /// Representative in the fundamental domain `{x + y tau : x, y in [0, 1)}`.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let (x, y) = self.coords(z);
        let (fx, fy) = (frac(x), frac(y));
        self.from_coords(fx, fy)
    }

    /// Flat distance from `z` to the nearest lattice point.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let (z0, _, _) = self.reduce_centered(z);
        let mut best = f64::INFINITY;
        for m in -1..=1 {
            for n in -1..=1 {
                let d = (z0 - c(m as f64) - self.tau * (n as f64)).norm();
                best = best.min(d);
            }
        }
        best
    }

    /// Flat torus distance between two points.
    pub fn distance(&self, a: Complex64, b: Complex64) -> f64 {
        self.lattice_distance(a - b)
    }

    /// Distance of `z` to the 2-torsion set `E_tau[2]`.
    pub fn half_period_distance(&self, z: Complex64) -> f64 {
        (0..4)
            .map(|k| self.distance(z, self.half_period(k)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the closest half period and its distance.
    pub fn nearest_half_period(&self, z: Complex64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for k in 0..4 {
            let d = self.distance(z, self.half_period(k));
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    pub fn point(&self, z: Complex64) -> TorusPoint {
        TorusPoint::new(self, z)
    }

    fn theta(&self, v: Complex64) -> ThetaAt {
        let w = (I * v).exp();
        let winv = 1.0 / w;
        let w2 = w * w;
        let w2inv = winv * winv;
        let mut p = w;
        let mut pinv = winv;
        let mut th1 = c(0.0);
        let mut th1p = c(0.0);
        let mut th2 = c(0.0);
        let mut th2p = c(0.0);
        for (n, &cn) in self.half_coeffs.iter().enumerate() {
            let k = (2 * n + 1) as f64;
            let sin = (p - pinv) / (2.0 * I);
            let cos = (p + pinv) / 2.0;
            let (a, b) = (cn * sin, cn * cos);
            if n % 2 == 0 {
                th1 += a;
                th1p += b * k;
            } else {
                th1 -= a;
                th1p -= b * k;
            }
            th2 += b;
            th2p -= a * k;
            let mag = a.norm().max(b.norm()) * k;
            if n > 1 && mag < SERIES_EPS * (th1.norm() + th2.norm() + th1p.norm()) {
                break;
            }
            p *= w2;
            pinv *= w2inv;
        }
        ThetaAt {
            th1: th1 * 2.0,
            th1p: th1p * 2.0,
            th2: th2 * 2.0,
            th2p: th2p * 2.0,
        }
    }

    fn guard(&self, z: Complex64, z0: Complex64) -> Result<()> {
        let d = z0.norm();
        if d < POLE_GUARD {
            return Err(Error::PoleProximity { z, dist: d });
        }
        Ok(())
    }

    /// `(wp(z), wp'(z))`.
    pub fn wp_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (z0, _, _) = self.reduce_centered(z);
        self.guard(z, z0)?;
        let th = self.theta(PI * z0);
        let ratio = th.th2 / th.th1;
        let k2 = self.wp_scale * self.wp_scale;
        let wp = self.e[0] + k2 * ratio * ratio;
        let dratio = PI * (th.th2p * th.th1 - th.th2 * th.th1p) / (th.th1 * th.th1);
        let wpp = 2.0 * k2 * ratio * dratio;
        Ok((wp, wpp))
    }

    /// `wp^{(order)}(z)` for `order` in `0..=3`.
    pub fn wp(&self, z: Complex64, order: u8) -> Result<Complex64> {
        let (p, dp) = self.wp_pair(z)?;
        Ok(match order {
            0 => p,
            1 => dp,
            2 => 6.0 * p * p - self.g2 / 2.0,
            3 => 12.0 * p * dp,
            _ => return Err(Error::InvalidInput(format!("wp order {order} not in 0..=3"))),
        })
    }

    /// `[wp, wp', wp'', wp''']` at `z`.
    pub fn wp_derivs(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let (p, dp) = self.wp_pair(z)?;
        Ok([p, dp, 6.0 * p * p - self.g2 / 2.0, 12.0 * p * dp])
    }

    /// Weierstrass zeta.
    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        let (z0, m, n) = self.reduce_centered(z);
        self.guard(z, z0)?;
        let th = self.theta(PI * z0);
        let base = self.eta[0] * z0 + PI * th.th1p / th.th1;
        Ok(base + self.eta[0] * (m as f64) + self.eta[1] * (n as f64))
    }

    /// Weierstrass sigma (entire, defined everywhere).
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        let (z0, m, n) = self.reduce_centered(z);
        let th = self.theta(PI * z0);
        let base = (self.eta[0] * z0 * z0 / 2.0).exp() * th.th1 / (PI * self.th1p0);
        if m == 0 && n == 0 {
            return base;
        }
        let lam = c(m as f64) + self.tau * (n as f64);
        let eta_lam = self.eta[0] * (m as f64) + self.eta[1] * (n as f64);
        let sign = if (m + n + m * n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        base * (eta_lam * (z0 + lam / 2.0)).exp() * sign
    }

    /// One solution `u` of `wp(u) = x` (the other is `-u`).
    ///
    /// Starts from Carlson's `R_F(x - e1, x - e2, x - e3)` and polishes
    /// with Newton on `wp`.
    pub fn wp_inverse(&self, x: Complex64) -> Result<Complex64> {
        let mut u = if x.norm() > 1e12 {
            1.0 / x.sqrt()
        } else {
            carlson_rf(x - self.e[0], x - self.e[1], x - self.e[2])
        };
        if !u.is_finite() || self.lattice_distance(u) < POLE_GUARD {
            u = self.wp_inverse_grid(x);
        }
        let polished = self.polish_inverse(u, x);
        match polished {
            Some(v) => Ok(v),
            None => {
                let g = self.wp_inverse_grid(x);
                self.polish_inverse(g, x).ok_or(Error::InvalidInput(format!(
                    "wp inversion failed for x = {x}"
                )))
            }
        }
    }

    fn polish_inverse(&self, mut u: Complex64, x: Complex64) -> Option<Complex64> {
        let scale = 1.0 + x.norm();
        for _ in 0..60 {
            let (p, dp) = match self.wp_pair(u) {
                Ok(v) => v,
                Err(_) => return None,
            };
            let f = p - x;
            if f.norm() <= 4e-16 * scale * 8.0 {
                return Some(u);
            }
            if dp.norm() == 0.0 {
                return None;
            }
            let step = f / dp;
            u -= step;
            if step.norm() < 1e-16 * (1.0 + u.norm()) {
                break;
            }
        }
        let p = self.wp(u, 0).ok()?;
        if (p - x).norm() <= 1e-9 * scale {
            Some(u)
        } else {
            None
        }
    }

    fn wp_inverse_grid(&self, x: Complex64) -> Complex64 {
        let mut best = (c(0.25) + self.tau * 0.25, f64::INFINITY);
        let n = 48;
        for i in 0..n {
            for j in 0..n {
                let u = self.from_coords((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                if let Ok(p) = self.wp(u, 0) {
                    let d = (p - x).norm();
                    if d < best.1 {
                        best = (u, d);
                    }
                }
            }
        }
        best.0
    }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Carlson's symmetric elliptic integral `R_F(x, y, z)` for complex
/// arguments off the negative real axis.
pub fn carlson_rf(mut x: Complex64, mut y: Complex64, mut z: Complex64) -> Complex64 {
    for _ in 0..100 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = (x + lam) / 4.0;
        y = (y + lam) / 4.0;
        z = (z + lam) / 4.0;
        let a = (x + y + z) / 3.0;
        let dx = 1.0 - x / a;
        let dy = 1.0 - y / a;
        let dz = 1.0 - z / a;
        if dx.norm().max(dy.norm()).max(dz.norm()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - e2 * e3 * (3.0 / 44.0))
                / a.sqrt();
        }
    }
    Complex64::new(f64::NAN, f64::NAN)
}

/// A point of `E_tau`, stored by its representative in `[0,1) x [0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct TorusPoint {
    pub rep: Complex64,
    pub coords: (f64, f64),
    tau: Complex64,
}

impl TorusPoint {
    pub fn new(t: &Torus, z: Complex64) -> TorusPoint {
        let (x, y) = t.coords(z);
        let coords = (frac(x), frac(y));
        TorusPoint {
            rep: t.from_coords(coords.0, coords.1),
            coords,
            tau: t.tau,
        }
    }

    fn rebuild(&self, z: Complex64) -> TorusPoint {
        let y = z.im / self.tau.im;
        let x = z.re - y * self.tau.re;
        let coords = (frac(x), frac(y));
        TorusPoint {
            rep: c(coords.0) + self.tau * coords.1,
            coords,
            tau: self.tau,
        }
    }

    pub fn neg(&self) -> TorusPoint {
        self.rebuild(-self.rep)
    }

    pub fn add(&self, other: &TorusPoint) -> TorusPoint {
        self.rebuild(self.rep + other.rep)
    }

    /// Flat torus distance.
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        let d = self.rep - other.rep;
        let y = d.im / self.tau.im;
        let x = d.re - y * self.tau.re;
        let (x0, y0) = (x - x.round(), y - y.round());
        let mut best = f64::INFINITY;
        for m in -1..=1 {
            for n in -1..=1 {
                let z = c(x0 - m as f64) + self.tau * (y0 - n as f64);
                best = best.min(z.norm());
            }
        }
        best
    }

    pub fn approx_eq(&self, other: &TorusPoint) -> bool {
        self.dist(other) < POINT_EQ_TOL
    }

    /// Membership in `E_tau[2]`.
    pub fn is_half_period(&self) -> bool {
        let (x, y) = self.coords;
        let near = |v: f64| {
            let d = 2.0 * v;
            (d - d.round()).abs()
        };
        let z = c(near(x) / 2.0) + self.tau * (near(y) / 2.0);
        z.norm() < POINT_EQ_TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(Torus::new(cx(0.3, -1.0)), Err(Error::NonHyperbolicTau(_))));
        assert!(matches!(Torus::new(cx(0.3, 0.0)), Err(Error::NonHyperbolicTau(_))));
    }

    #[test]
    fn square_lattice_constants() {
        let t = Torus::new(cx(0.0, 1.0)).unwrap();
        assert!(t.legendre_residual().norm() < 1e-12);
        assert!(t.g3.norm() < 1e-10 * t.g2.norm());
        // wp((1 + i)/2 | i) = 0 by the rotation symmetry wp(iz) = -wp(z).
        assert!(t.e[2].norm() < 1e-10 * t.e[0].norm());
        assert!((t.e[0] + t.e[1]).norm() < 1e-10 * t.e[0].norm());
    }

    #[test]
    fn e_sum_vanishes() {
        let t = Torus::new(cx(0.3, 1.1)).unwrap();
        let scale: f64 = t.e.iter().map(|e| e.norm()).sum();
        assert!((t.e[0] + t.e[1] + t.e[2]).norm() < 1e-12 * scale);
    }

    #[test]
    fn e_k_are_wp_at_half_periods() {
        let t = Torus::new(cx(0.2, 1.3)).unwrap();
        for k in 1..4 {
            let v = t.wp(t.half_period(k), 0).unwrap();
            assert!((v - t.e_k(k)).norm() < 1e-11 * (1.0 + v.norm()), "k = {k}");
            let d = t.wp(t.half_period(k), 1).unwrap();
            assert!(d.norm() < 1e-10, "wp'(omega_{k}/2) = {d}");
        }
    }

    #[test]
    fn laurent_leading_term() {
        let t = Torus::new(cx(0.0, 1.0)).unwrap();
        let z = cx(0.001, 0.0);
        let v = t.wp(z, 0).unwrap();
        assert!((z * z * v - 1.0).norm() < 1e-5);
    }

    #[test]
    fn pole_guard() {
        let t = Torus::new(cx(0.1, 0.9)).unwrap();
        assert!(matches!(t.wp(cx(1.0, 0.0), 0), Err(Error::PoleProximity { .. })));
        assert!(matches!(t.zeta(t.tau + 1e-8), Err(Error::PoleProximity { .. })));
        assert!(t.sigma(t.tau).norm() < 1e-12);
    }

    #[test]
    fn zeta_quasi_periods() {
        let t = Torus::new(cx(-0.15, 0.8)).unwrap();
        let z = cx(0.31, 0.17);
        let d1 = t.zeta(z + 1.0).unwrap() - t.zeta(z).unwrap() - t.eta[0];
        let d2 = t.zeta(z + t.tau).unwrap() - t.zeta(z).unwrap() - t.eta[1];
        assert!(d1.norm() < 1e-10 && d2.norm() < 1e-10);
    }

    #[test]
    fn sigma_transformation_law() {
        let t = Torus::new(cx(0.2, 1.3)).unwrap();
        let z = cx(0.21, 0.4);
        for (j, om) in [c(1.0), t.tau].into_iter().enumerate() {
            let lhs = t.sigma(z + om);
            let rhs = -(t.eta[j] * (z + om / 2.0)).exp() * t.sigma(z);
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm(), "j = {j}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let t = Torus::new(cx(0.2, 1.3)).unwrap();
        for &u in &[cx(0.3, 0.2), cx(0.05, 0.01), cx(0.7, 1.1), cx(0.49, 0.02)] {
            let x = t.wp(u, 0).unwrap();
            let v = t.wp_inverse(x).unwrap();
            let back = t.wp(v, 0).unwrap();
            assert!((back - x).norm() < 1e-9 * (1.0 + x.norm()));
            let (pu, pv) = (t.point(u), t.point(v));
            assert!(pu.dist(&pv) < 1e-7 || pu.dist(&pv.neg()) < 1e-7);
        }
        // huge x lands near the origin
        let v = t.wp_inverse(cx(1e10, 3e9)).unwrap();
        assert!(t.lattice_distance(v) < 1e-4);
    }

    #[test]
    fn torus_point_ops() {
        let t = Torus::new(cx(0.2, 1.3)).unwrap();
        let a = t.point(cx(0.3, 0.2));
        let b = t.point(cx(0.3, 0.2) + 3.0 - t.tau * 2.0);
        assert!(a.approx_eq(&b));
        assert!(a.add(&a.neg()).dist(&t.point(c(0.0))) < 1e-12);
        for k in 0..4 {
            assert!(t.point(t.half_period(k) + t.tau).is_half_period());
        }
        assert!(!a.is_half_period());
    }

    #[test]
    fn agrees_with_lattice_sums() {
        use crate::oracle::LatticeOracle;
        for tau in [cx(0.0, 1.0), cx(0.5, 0.866_025_403_784_438_6), cx(0.3, 1.1), cx(-0.4, 0.7)] {
            let t = Torus::new(tau).unwrap();
            let o = LatticeOracle::new(tau, 150);
            for &z in &[cx(0.21, 0.13), cx(-0.3, 0.4), cx(1.37, -0.52)] {
                let rel = |a: Complex64, b: Complex64| (a - b).norm() / (1.0 + b.norm());
                assert!(rel(t.wp(z, 0).unwrap(), o.wp(z)) < 1e-8, "wp {tau} {z}");
                assert!(rel(t.wp(z, 1).unwrap(), o.wp_prime(z)) < 1e-8, "wp' {tau} {z}");
                assert!(rel(t.zeta(z).unwrap(), o.zeta(z)) < 1e-8, "zeta {tau} {z}");
                assert!(rel(t.sigma(z), o.sigma(z)) < 1e-8, "sigma {tau} {z}");
            }
            assert!((t.g2 - o.g2()).norm() < 1e-9 * t.g2.norm().max(1.0));
            assert!((t.g3 - o.g3()).norm() < 1e-9 * t.g2.norm().max(1.0));
        }
    }
}
