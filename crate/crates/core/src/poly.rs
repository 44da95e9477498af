//! Dense complex polynomials (ascending coefficients) and simultaneous root
//! finding.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add_into(acc: &mut Vec<Complex64>, a: &[Complex64], scale: Complex64) {
    if acc.len() < a.len() {
        acc.resize(a.len(), ZERO);
    }
    for (i, x) in a.iter().enumerate() {
        acc[i] += scale * x;
    }
}

pub fn pow(a: &[Complex64], e: u32) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..e {
        out = mul(&out, a);
    }
    out
}

/// Horner evaluation of `p` and `p'`.
pub fn eval_with_derivative(p: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut v = ZERO;
    let mut d = ZERO;
    for &c in p.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

pub fn eval(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

/// Drops leading coefficients below `rel * max |c_i|`. Returns the trimmed
/// polynomial and the number of dropped coefficients.
pub fn trim(p: &[Complex64], rel: f64) -> (Vec<Complex64>, usize) {
    let m = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut n = p.len();
    while n > 1 && p[n - 1].norm() <= rel * m {
        n -= 1;
    }
    (p[..n].to_vec(), p.len() - n)
}

/// All roots of `p` by the Aberth–Ehrlich iteration, followed by a Newton
/// polish on the original polynomial.
pub fn roots(p: &[Complex64]) -> Vec<Complex64> {
    let deg = p.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    let monic: Vec<Complex64> = p.iter().map(|c| c / lead).collect();
    if deg == 1 {
        return vec![-monic[0]];
    }
    // Initial guesses on a circle of the Cauchy-bound radius, rotated to
    // avoid symmetric configurations.
    let radius = monic[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm().powf(1.0 / (deg - i) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(radius, ang)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let (v, d) = eval_with_derivative(&monic, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let mut s = ZERO;
            for j in 0..deg {
                if j != i {
                    s += 1.0 / (z[i] - z[j]);
                }
            }
            let step = ratio / (1.0 - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    for r in &mut z {
        for _ in 0..3 {
            let (v, d) = eval_with_derivative(p, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.is_finite() || step.norm() > 1e-6 * (1.0 + r.norm()) {
                break;
            }
            *r -= step;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recovers_known_roots() {
        let rs = [cx(1.0, 0.5), cx(-0.3, 2.0), cx(0.2, -0.7), cx(3.0, 0.0)];
        let mut p = vec![cx(1.0, 0.0)];
        for &r in &rs {
            p = mul(&p, &[-r, cx(1.0, 0.0)]);
        }
        let found = roots(&p);
        for r in rs {
            assert!(found.iter().any(|f| (f - r).norm() < 1e-12));
        }
    }

    #[test]
    fn trim_drops_tiny_leading() {
        let (t, k) = trim(&[cx(1.0, 0.0), cx(2.0, 0.0), cx(1e-18, 0.0)], 1e-12);
        assert_eq!((t.len(), k), (2, 1));
    }

    proptest! {
        #[test]
        fn roots_annihilate(coefs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..8)) {
            let mut p: Vec<Complex64> = coefs.iter().map(|&(a, b)| cx(a, b)).collect();
            p.push(cx(1.0, 0.0));
            let scale: f64 = p.iter().map(|c| c.norm()).sum();
            for r in roots(&p) {
                let bound = scale * (1.0 + r.norm()).powi(p.len() as i32);
                prop_assert!(eval(&p, r).norm() < 1e-10 * bound);
            }
        }
    }
}
