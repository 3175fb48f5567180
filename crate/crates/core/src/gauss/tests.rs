use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, PI};

use nalgebra::DVector;

use super::*;

fn e(d: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[i] = 1.0;
    v
}

#[test]
fn width_of_a_line() {
    let cone = Cone::subspace(5, &[e(5, 0)]).unwrap();
    let w = gaussian_width_mc(&cone, 20_000, &RngStream::new(1, 0)).unwrap();
    assert_eq!(w.method, WidthMethod::ExactSupport);
    assert!((w.mean - (2.0 / PI).sqrt()).abs() <= 3.0 * w.stderr, "{w:?}");
}

#[test]
fn width_of_full_space() {
    let w = gaussian_width_mc(&Cone::full_space(7), 20_000, &RngStream::new(2, 0)).unwrap();
    assert!((w.mean - expected_gauss_length(7).unwrap()).abs() <= 3.0 * w.stderr);
}

#[test]
fn sample_size_and_zero_cone_are_rejected() {
    let rng = RngStream::new(0, 0);
    assert!(gaussian_width_mc(&Cone::full_space(3), 999, &rng).is_err());
    assert!(statistical_dim_mc(&Cone::zero(3), 2000, &rng).is_err());
}

#[test]
fn subspace_statistical_dimension() {
    let cone = Cone::subspace(10, &[e(10, 0), e(10, 3), e(10, 7)]).unwrap();
    let s = statistical_dim_mc(&cone, 20_000, &RngStream::new(3, 0)).unwrap();
    assert!((s.mean - 3.0).abs() <= 3.0 * s.stderr, "{s:?}");
}

#[test]
fn circular_formula_examples() {
    assert!((circ_stat_dim_formula(100, FRAC_PI_6).unwrap() - 25.0).abs() < 1e-12);
    assert!((circ_stat_dim_formula(40, FRAC_PI_4).unwrap() - 20.0).abs() < 1e-12);
    assert!(circ_stat_dim_formula(10, 0.0).is_err());
}

#[test]
fn circular_statistical_dimension_and_sandwich() {
    let cone = Cone::circular(25, FRAC_PI_6).unwrap();
    let rng = RngStream::new(4, 0);
    let s = statistical_dim_mc(&cone, 20_000, &rng).unwrap();
    let w = gaussian_width_mc(&cone, 20_000, &rng).unwrap();
    assert!((s.mean - circ_stat_dim_formula(25, FRAC_PI_6).unwrap()).abs() <= 3.0 + 3.0 * s.stderr);
    let band = 6.0 * (s.stderr + 2.0 * w.mean * w.stderr);
    assert!(w.mean * w.mean <= s.mean + band);
    assert!(s.mean <= w.mean * w.mean + 1.0 + band);
}

#[test]
fn expansion_matches_formula() {
    let cone = Cone::circular(60, FRAC_PI_8).unwrap();
    let grown = cone.circ_expansion(PI / 12.0).unwrap();
    let s = statistical_dim_mc(&grown, 20_000, &RngStream::new(5, 0)).unwrap();
    let f = circ_stat_dim_formula(60, FRAC_PI_8 + PI / 12.0).unwrap();
    assert!((s.mean - f).abs() <= 3.0 + 3.0 * s.stderr);
}

#[test]
fn nested_cones_have_ordered_widths() {
    let rng = RngStream::new(6, 0);
    let small = gaussian_width_mc(&Cone::circular(20, 0.2).unwrap(), 5000, &rng).unwrap();
    let big = gaussian_width_mc(&Cone::circular(20, 0.5).unwrap(), 5000, &rng).unwrap();
    assert!(small.mean <= big.mean + 6.0 * big.stderr);
}

#[test]
fn projection_width_for_descent_cones() {
    let mut x0 = DVector::zeros(12);
    x0[0] = 1.0;
    let cone = crate::cones::l1_descent_cone(&x0).unwrap();
    let w = gaussian_width_mc(&cone, 2000, &RngStream::new(7, 0)).unwrap();
    assert_eq!(w.method, WidthMethod::Projection);
    assert!(w.mean > 0.0 && w.mean < expected_gauss_length(12).unwrap());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cone = Cone::circular(15, 0.4).unwrap();
    let rng = RngStream::new(8, 0);
    let a = statistical_dim_mc(&cone, 5000, &rng).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| statistical_dim_mc(&cone, 5000, &rng).unwrap());
    assert_eq!(a, b);
}

#[test]
fn width_expansion_cases() {
    let cone = Cone::circular(50, FRAC_PI_8).unwrap();
    let rng = RngStream::new(9, 0);
    let r0 = width_expansion_check(&cone, 0.0, 5000, &rng).unwrap();
    assert!(r0.passed);
    assert_eq!(r0.aggregates["w_c"], r0.aggregates["w_expanded"]);
    let r = width_expansion_check(&cone, PI / 12.0, 20_000, &rng).unwrap();
    assert!(r.passed && r.verify());
    let near = width_expansion_check(&cone, std::f64::consts::FRAC_PI_2 - FRAC_PI_8 - 1e-3, 5000, &rng).unwrap();
    assert!(near.passed);
    assert!(width_expansion_check(&Cone::full_space(3), 0.1, 5000, &rng).is_err());
}

#[test]
fn escape_event_impossible_for_large_t() {
    let cone = Cone::circular(6, FRAC_PI_8).unwrap();
    let r = escape_mesh_experiment(&cone, 4, 5.0, 500, &RngStream::new(10, 0)).unwrap();
    assert_eq!(r.aggregates["frequency"], 0.0);
    assert!(r.passed);
    assert!(r.notes.iter().any(|n| n.contains("vacuous_threshold")));
}

#[test]
fn escape_frequency_monotone_in_t() {
    let cone = Cone::circular(6, 0.6).unwrap();
    let rng = RngStream::new(11, 0);
    let mut prev = f64::INFINITY;
    for t in [0.0, 0.25, 0.5, 1.0] {
        let r = escape_mesh_experiment(&cone, 5, t, 500, &rng).unwrap();
        let f = r.aggregates["frequency"];
        assert!(f <= prev);
        assert!(r.passed);
        prev = f;
    }
}
