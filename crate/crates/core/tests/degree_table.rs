use std::sync::Arc;

use lame_geom::addition::{measure_degree, DegreeMethod, FamilySpec};
use lame_geom::{MultiIndex, Torus};
use num_complex::Complex64;

fn torus() -> Arc<Torus> {
    Arc::new(Torus::new(Complex64::new(0.2, 1.3)).unwrap())
}

#[test]
fn h_degrees_by_both_methods() {
    for (n, d) in [([1, 0, 0, 0], 1), ([2, 0, 0, 0], 3), ([1, 1, 0, 0], 2), ([1, 2, 0, 0], 4)] {
        let fam = FamilySpec::h(torus(), MultiIndex::new(n));
        let r = measure_degree(&fam, DegreeMethod::Both, 7).unwrap();
        assert_eq!(r.measured_degree, d, "{n:?}");
        assert!(r.agrees);
    }
}

#[test]
fn gle_degrees_by_both_methods() {
    let p = Complex64::new(0.21, 0.33);
    for (n, d) in [([0, 0, 0, 0], 1), ([1, 0, 0, 0], 3), ([2, 0, 0, 0], 7), ([1, 1, 0, 0], 5)] {
        let fam = FamilySpec::gle(torus(), MultiIndex::new(n), p).unwrap();
        let r = measure_degree(&fam, DegreeMethod::Both, 11).unwrap();
        assert_eq!(r.measured_degree, d, "{n:?}");
        assert!(r.agrees);
    }
}
