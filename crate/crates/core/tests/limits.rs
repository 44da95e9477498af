use std::sync::Arc;

use lame_geom::limits::{run_a_limit, run_b_limit_h, run_p_limit, run_p_limit_fixed_a, Branch};
use lame_geom::{MultiIndex, Torus};
use num_complex::Complex64;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn torus() -> Arc<Torus> {
    Arc::new(Torus::new(cx(0.2, 1.3)).unwrap())
}

#[test]
fn a_limit_reaches_both_points_at_infinity() {
    let t = torus();
    let p = cx(0.21, 0.33);
    for n in [[1, 0, 0, 0], [1, 1, 0, 0]] {
        for sign in [1, -1] {
            let sc = run_a_limit(&t, MultiIndex::new(n), p, &[10.0, 1e2, 1e3, 1e4], sign).unwrap();
            assert!(sc.final_distance.unwrap() < 1e-2);
            assert!(sc.monotone_tail);
            let s: Vec<f64> = sc.records.iter().map(|r| r.sigma_distance.unwrap()).collect();
            assert!(s.windows(2).all(|w| w[1] < w[0]), "{s:?}");
            assert!(sc.max_identity_residual.unwrap() < 1e-6);
        }
    }
}

#[test]
fn p_limit_matches_shifted_h_divisors() {
    let t = torus();
    let bt = cx(0.7, 0.3);
    for (n, k) in [([1, 0, 0, 0], 0), ([1, 1, 0, 0], 1), ([1, 1, 0, 0], 0)] {
        for br in [Branch::Plus, Branch::Minus] {
            let sc = run_p_limit(&t, MultiIndex::new(n), k, br, bt, &[1e-1, 1e-2, 1e-3]).unwrap();
            assert!(sc.final_distance.unwrap() < 1e-2);
            assert!(sc.monotone_tail);
            let slope = sc.b_slope.unwrap();
            assert!((0.7..=2.3).contains(&slope), "{slope}");
            assert!(sc.max_identity_residual.unwrap() < 1e-6, "n={n:?} k={k} {br:?}");
        }
    }
}

#[test]
fn fixed_a_p_limit_diverges() {
    let t = torus();
    let sc = run_p_limit_fixed_a(&t, MultiIndex::new([1, 0, 0, 0]), 0, cx(1.0, 0.0), &[1e-1, 1e-2, 1e-3]).unwrap();
    let b: Vec<f64> = sc.records.iter().map(|r| r.b.unwrap().norm()).collect();
    assert!(b[2] > 50.0 * b[1] && b[1] > 50.0 * b[0]);
    assert!(sc.monotone_tail);
}

#[test]
fn large_b_limit_of_h_family() {
    let t = torus();
    for n in [[1, 0, 0, 0], [1, 1, 0, 0], [2, 0, 0, 0]] {
        let sc = run_b_limit_h(&t, MultiIndex::new(n), &[1e2, 1e3, 1e4]).unwrap();
        let r = sc.records.last().unwrap().ratio.unwrap();
        assert!((r - 1.0).norm() < 0.05, "{r}");
        assert!(sc.monotone_tail);
        let s = sc.records.last().unwrap().sigma_distance.unwrap();
        assert!(s < 1e-1, "{s}");
    }
}
