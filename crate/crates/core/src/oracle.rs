//! Independent reference values from direct lattice sums.
//!
//! Used only by tests and the `verify` suites. Nothing here shares code with
//! the theta-function kernels: sums run over `|m|, |n| <= N` and the
//! truncation tail is restored from Eisenstein series in `q^2`.

use std::f64::consts::PI;

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lattice-sum evaluator for `Z + Z tau`.
#[derive(Debug, Clone)]
pub struct LatticeOracle {
    pub tau: Complex64,
    pub n: i64,
    /// `G_4 - G_4^{(N)}` and `G_6 - G_6^{(N)}`.
    dg4: Complex64,
    dg6: Complex64,
    pub g4: Complex64,
    pub g6: Complex64,
}

fn divisor_power_sum(n: u64, p: u32) -> f64 {
    let mut s = 0.0;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += (d as f64).powi(p as i32);
            let e = n / d;
            if e != d {
                s += (e as f64).powi(p as i32);
            }
        }
        d += 1;
    }
    s
}

/// `(G_4, G_6)` from their q-expansions.
pub fn eisenstein(tau: Complex64) -> (Complex64, Complex64) {
    let q2 = (2.0 * PI * I * tau).exp();
    let mut e4 = Complex64::new(1.0, 0.0);
    let mut e6 = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..2000u64 {
        qn *= q2;
        let t4 = qn * (240.0 * divisor_power_sum(n, 3));
        let t6 = qn * (-504.0 * divisor_power_sum(n, 5));
        e4 += t4;
        e6 += t6;
        if t4.norm() < 1e-19 && t6.norm() < 1e-19 {
            break;
        }
    }
    (e4 * (PI.powi(4) / 45.0), e6 * (2.0 * PI.powi(6) / 945.0))
}

impl LatticeOracle {
    pub fn new(tau: Complex64, n: i64) -> LatticeOracle {
        let (g4, g6) = eisenstein(tau);
        let mut t4 = Complex64::new(0.0, 0.0);
        let mut t6 = Complex64::new(0.0, 0.0);
        Self::for_each_omega(tau, n, |w| {
            let w2 = w * w;
            let w4 = w2 * w2;
            t4 += 1.0 / w4;
            t6 += 1.0 / (w4 * w2);
        });
        LatticeOracle {
            tau,
            n,
            dg4: g4 - t4,
            dg6: g6 - t6,
            g4,
            g6,
        }
    }

    fn for_each_omega(tau: Complex64, n: i64, mut f: impl FnMut(Complex64)) {
        for m in -n..=n {
            for k in -n..=n {
                if m == 0 && k == 0 {
                    continue;
                }
                f(Complex64::new(m as f64, 0.0) + tau * (k as f64));
            }
        }
    }

    pub fn g2(&self) -> Complex64 {
        60.0 * self.g4
    }

    pub fn g3(&self) -> Complex64 {
        140.0 * self.g6
    }

    pub fn wp(&self, z: Complex64) -> Complex64 {
        let mut s = 1.0 / (z * z);
        Self::for_each_omega(self.tau, self.n, |w| {
            let d = z - w;
            s += 1.0 / (d * d) - 1.0 / (w * w);
        });
        let z2 = z * z;
        s + 3.0 * z2 * self.dg4 + 5.0 * z2 * z2 * self.dg6
    }

    pub fn wp_prime(&self, z: Complex64) -> Complex64 {
        let mut s = -2.0 / (z * z * z);
        Self::for_each_omega(self.tau, self.n, |w| {
            let d = z - w;
            s -= 2.0 / (d * d * d);
        });
        let z2 = z * z;
        s + 6.0 * z * self.dg4 + 20.0 * z * z2 * self.dg6
    }

    pub fn zeta(&self, z: Complex64) -> Complex64 {
        let mut s = 1.0 / z;
        Self::for_each_omega(self.tau, self.n, |w| {
            s += 1.0 / (z - w) + 1.0 / w + z / (w * w);
        });
        let z3 = z * z * z;
        s - z3 * self.dg4 - z3 * z * z * self.dg6
    }

    pub fn sigma(&self, z: Complex64) -> Complex64 {
        let mut log = z.ln();
        Self::for_each_omega(self.tau, self.n, |w| {
            let r = z / w;
            log += (1.0 - r).ln() + r + r * r / 2.0;
        });
        let z2 = z * z;
        let z4 = z2 * z2;
        (log - z4 / 4.0 * self.dg4 - z4 * z2 / 6.0 * self.dg6).exp()
    }

    /// `eta_1 = 2 zeta(1/2)` and `eta_2 = 2 zeta(tau/2)`.
    pub fn etas(&self) -> (Complex64, Complex64) {
        (
            2.0 * self.zeta(Complex64::new(0.5, 0.0)),
            2.0 * self.zeta(self.tau / 2.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_lattice_g6_vanishes() {
        let (g4, g6) = eisenstein(I);
        assert!(g6.norm() < 1e-12 * g4.norm());
    }

    #[test]
    fn legendre_from_sums() {
        let o = LatticeOracle::new(Complex64::new(0.1, 1.2), 120);
        let (e1, e2) = o.etas();
        let r = o.tau * e1 - e2 - 2.0 * PI * I;
        assert!(r.norm() < 1e-8, "{r}");
    }
}
