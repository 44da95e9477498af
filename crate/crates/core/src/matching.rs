//! Distance between point multisets on the torus.
//!
//! The distance is the bottleneck of an optimal perfect matching: the
//! smallest `d` such that the points can be paired with every pair at torus
//! distance at most `d`. Found by bisection over the candidate pair
//! distances with an augmenting-path matching at each threshold.

use num_complex::Complex64;

use crate::elliptic::Torus;

fn try_kuhn(u: usize, adj: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for v in 0..adj[u].len() {
        if adj[u][v] && !seen[v] {
            seen[v] = true;
            if owner[v].map_or(true, |w| try_kuhn(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
    }
    false
}

fn perfect_matching(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut owner = vec![None; n];
    for u in 0..n {
        let mut seen = vec![false; n];
        if !try_kuhn(u, adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut assign = vec![0; n];
    for (v, o) in owner.iter().enumerate() {
        assign[o.expect("perfect matching")] = v;
    }
    Some(assign)
}

/// Bottleneck matching. Returns the distance and `assign[i]`, the index in
/// `b` paired with `a[i]`. Sets of different size are at infinite distance.
pub fn bottleneck_matching(t: &Torus, a: &[Complex64], b: &[Complex64]) -> (f64, Vec<usize>) {
    if a.len() != b.len() {
        return (f64::INFINITY, Vec::new());
    }
    if a.is_empty() {
        return (0.0, Vec::new());
    }
    let n = a.len();
    let dist: Vec<Vec<f64>> = a
        .iter()
        .map(|&x| b.iter().map(|&y| t.distance(x, y)).collect())
        .collect();
    let mut cands: Vec<f64> = dist.iter().flatten().copied().collect();
    cands.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    cands.dedup();
    let feasible = |d: f64| {
        let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| dist[i][j] <= d).collect()).collect();
        perfect_matching(&adj)
    };
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let assign = feasible(cands[lo]).expect("largest threshold is always feasible");
    (cands[lo], assign)
}

pub fn matched_distance(t: &Torus, a: &[Complex64], b: &[Complex64]) -> f64 {
    bottleneck_matching(t, a, b).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lattice_shifts_do_not_matter() {
        let t = Torus::new(cx(0.2, 1.3)).unwrap();
        let a = [cx(0.1, 0.1), cx(0.5, 0.6), cx(0.9, 0.2)];
        let b = [a[2] - 1.0, a[0] + t.tau, a[1] + 0.001];
        let (d, assign) = bottleneck_matching(&t, &a, &b);
        assert!((d - 0.001).abs() < 1e-12);
        assert_eq!(assign, vec![1, 2, 0]);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6), perm_seed in 0usize..100) {
            let t = Torus::new(cx(0.1, 1.1)).unwrap();
            let a: Vec<Complex64> = pts.iter().map(|&(x, y)| t.from_coords(x, y)).collect();
            let mut b = a.clone();
            b.rotate_left(perm_seed % a.len());
            prop_assert!(matched_distance(&t, &a, &b) < 1e-12);
            let shifted: Vec<Complex64> = a.iter().map(|z| z + 0.01).collect();
            let d1 = matched_distance(&t, &a, &shifted);
            let d2 = matched_distance(&t, &shifted, &a);
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!(d1 <= 0.01 + 1e-12);
        }
    }
}
