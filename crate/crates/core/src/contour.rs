//! Winding numbers by adaptive argument tracking.
//!
//! The change of `arg f` along a closed path is accumulated segment by
//! segment; a segment is bisected until the argument increment on it is
//! small, so the count cannot skip a full turn between nodes.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 22;
const MAX_INCREMENT: f64 = 0.35;

const MAX_NODES: usize = 4096;

/// Winding number of `f` along the closed path `t in [0, 1] -> path(t)`.
///
/// The tracked count is repeated with doubled starting nodes until two
/// consecutive counts agree, which rules out whole turns aliased between
/// the coarse nodes. Returns the unrounded value.
pub fn winding<F, P>(f: F, path: P, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
    P: Fn(f64) -> Complex64,
{
    let mut n = nodes.max(8);
    let mut prev = tracked(&f, &path, n)?;
    while n < MAX_NODES {
        n *= 2;
        let cur = tracked(&f, &path, n)?;
        if (cur - prev).abs() < 1e-6 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergentQuadrature)
}

fn tracked<F, P>(f: &F, path: &P, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
    P: Fn(f64) -> Complex64,
{
    let eval = |t: f64| -> Result<Complex64> {
        let v = f(path(t))?;
        if !v.is_finite() || v.norm() == 0.0 {
            return Err(Error::ContourThroughZero);
        }
        Ok(v)
    };
    let mut total = 0.0;
    let mut prev_t = 0.0;
    let mut prev = eval(0.0)?;
    for i in 1..=nodes {
        let t = i as f64 / nodes as f64;
        let cur = if i == nodes { eval(0.0)? } else { eval(t)? };
        total += segment(&eval, prev_t, t, prev, cur, 0)?;
        prev_t = t;
        prev = cur;
    }
    Ok(total / (2.0 * PI))
}

fn segment<E>(eval: &E, t0: f64, t1: f64, f0: Complex64, f1: Complex64, depth: u32) -> Result<f64>
where
    E: Fn(f64) -> Result<Complex64>,
{
    let d = (f1 / f0).arg();
    if d.abs() <= MAX_INCREMENT {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NonConvergentQuadrature);
    }
    let tm = 0.5 * (t0 + t1);
    let fm = eval(tm)?;
    Ok(segment(eval, t0, tm, f0, fm, depth + 1)? + segment(eval, tm, t1, fm, f1, depth + 1)?)
}

/// Winding of `f` around the circle `|z - center| = radius`.
pub fn winding_circle<F>(f: F, center: Complex64, radius: f64, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    winding(
        f,
        |t| center + Complex64::from_polar(radius, 2.0 * PI * t),
        nodes,
    )
}

/// Winding of `f` around the boundary of the axis-parallel rectangle
/// `[x0, x1] x [y0, y1]`, traversed counter-clockwise.
pub fn winding_rect<F>(f: F, x0: f64, x1: f64, y0: f64, y1: f64, nodes: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let corners = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
    ];
    winding(
        f,
        |t| {
            let s = (t * 4.0).min(4.0 - 1e-15);
            let i = s.floor() as usize;
            let u = s - i as f64;
            corners[i] + (corners[(i + 1) % 4] - corners[i]) * u
        },
        nodes.max(4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn counts_zeros_minus_poles() {
        let f = |z: Complex64| Ok((z - cx(0.1, 0.2)).powi(3) * (z + cx(0.3, 0.0)) / (z - cx(0.0, -0.5)));
        let w = winding_circle(f, cx(0.0, 0.0), 1.0, 16).unwrap();
        assert!((w - 3.0).abs() < 1e-9);
        let w = winding_rect(f, -0.2, 0.4, 0.0, 0.5, 8).unwrap();
        assert!((w - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fast_rotation_is_resolved() {
        let f = |z: Complex64| Ok(z.powi(40));
        let w = winding_circle(f, cx(0.0, 0.0), 1.0, 8).unwrap();
        assert!((w - 40.0).abs() < 1e-9);
    }

    #[test]
    fn zero_on_path_reported() {
        let f = |z: Complex64| Ok(z - cx(1.0, 0.0));
        assert!(matches!(
            winding_circle(f, cx(0.0, 0.0), 1.0, 8),
            Err(Error::ContourThroughZero)
        ));
    }
}
