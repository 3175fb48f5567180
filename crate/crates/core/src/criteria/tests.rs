use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::cones::{l1_descent_cone, Polytope};
use crate::numkernel::{gaussian_matrix, LinearMap, RngStream};
use crate::rsv::{restricted_sv, separation_angle, RsvOptions};
use crate::solvers::exact_recovery_test;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Eigenvalues of a symmetric 2×2 block in closed form.
fn pair_delta(g: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let (a, b, c) = (g[(i, i)], g[(i, j)], g[(j, j)]);
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mid + rad - 1.0).max(1.0 - (mid - rad))
}

#[test]
fn rip_of_isometries_and_diagonal() {
    let q = LinearMap::new(DMatrix::identity(5, 5)).unwrap();
    let t = rip_constants(&q, 3).unwrap();
    assert!(t.delta.values().all(|&v| v.abs() < 1e-12));
    let diag = LinearMap::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])).unwrap();
    let t = rip_constants(&diag, 2).unwrap();
    assert!((t.get(1).unwrap() - 3.0).abs() < 1e-12);
    assert!((t.get(2).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn rip_pairs_match_closed_form() {
    let a = gaussian_matrix(&mut RngStream::new(11, 0), 8, 12)
        .unwrap()
        .scaled(1.0 / 8f64.sqrt())
        .unwrap();
    let t = rip_constants(&a, 3).unwrap();
    let g = a.matrix().tr_mul(a.matrix());
    let mut d2: f64 = 0.0;
    let mut count = 0;
    for i in 0..12 {
        for j in i + 1..12 {
            d2 = d2.max(pair_delta(&g, i, j));
            count += 1;
        }
    }
    assert_eq!(count, 66);
    assert!((t.get(2).unwrap() - d2).abs() <= 1e-10);
    let d1 = (0..12).map(|i| (g[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
    assert!((t.get(1).unwrap() - d1).abs() <= 1e-12);
    assert!(t.get(1) <= t.get(2) && t.get(2) <= t.get(3));
}

#[test]
fn rip_budget_and_range() {
    let a = gaussian_matrix(&mut RngStream::new(1, 0), 10, 40).unwrap();
    assert!(matches!(rip_constants(&a, 20), Err(crate::Error::BudgetExceeded(_))));
    assert!(rip_constants(&a, 0).is_err());
    assert!(rip_constants(&a, 41).is_err());
}

#[test]
fn lexicographic_supports() {
    let s = rip::supports_of_size(4, 2);
    assert_eq!(
        s,
        vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
    );
    assert_eq!(rip::supports_of_size(3, 3), vec![vec![0, 1, 2]]);
}

#[test]
fn rip_cross_bound() {
    let q = LinearMap::new(DMatrix::identity(6, 6)).unwrap();
    let r = check_rip_cross(&q, 2, 100, &mut RngStream::new(3, 0)).unwrap();
    assert!(r.passed);
    assert!(r.aggregates["max_ratio"] < 1e-15);
    let a = gaussian_matrix(&mut RngStream::new(5, 0), 8, 12)
        .unwrap()
        .scaled(1.0 / 8f64.sqrt())
        .unwrap();
    let r = check_rip_cross(&a, 2, 1000, &mut RngStream::new(6, 0)).unwrap();
    assert!(r.passed && r.verify());
}

#[test]
fn nsp_trivial_cases() {
    let a = LinearMap::new(DMatrix::identity(3, 3)).unwrap();
    assert!(nsp_check(&a, &[0, 1]).unwrap());
    // kernel = span{e_2}
    let a = LinearMap::new(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
    assert!(!nsp_check(&a, &[2]).unwrap());
    assert!(nsp_check(&a, &[0]).unwrap());
    assert!(nsp_check(&a, &[]).unwrap());
    assert!(nsp_check(&a, &[0, 0]).is_err());
    assert!(nsp_check(&a, &[3]).is_err());
}

#[test]
fn nsp_margin_on_known_kernel() {
    // kernel = span{(1, 1, 1)}
    let a = LinearMap::new(DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0])).unwrap();
    assert!((nsp_margin(&a, &[0]).unwrap().unwrap() - 2.0).abs() < 1e-9);
    assert!((nsp_margin(&a, &[0, 1]).unwrap().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn nsp_agrees_with_recovery() {
    let mut rng = RngStream::new(2024, 0);
    for _ in 0..20 {
        let a = gaussian_matrix(&mut rng, 6, 10).unwrap();
        let s = rng.subset(10, 2);
        let nsp = nsp_check(&a, &s).unwrap();
        let mut all = true;
        for (p, q) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut x0 = DVector::zeros(10);
            x0[s[0]] = p;
            x0[s[1]] = q;
            all &= exact_recovery_test(&a, &x0, 1e-6).unwrap().passed();
        }
        assert_eq!(nsp, all);
    }
}

#[test]
fn rnsp_trivial_cases() {
    let a = gaussian_matrix(&mut RngStream::new(8, 0), 6, 4).unwrap();
    let t = [0, 2];
    let tau = 1.01 * 2f64.sqrt() / a.sigma_min_full();
    let r = rnsp_check(&a, &t, 0.0, tau).unwrap();
    assert!(r.holds, "{r:?}");
    // kernel = span{e_0}
    let a = LinearMap::new(DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
    let r = rnsp_check(&a, &[0], 0.0, 0.0).unwrap();
    assert!(!r.holds);
    assert!((r.worst_slack - 1.0).abs() < 1e-12);
    let r = rnsp_check(&a, &[0], 0.5, 10.0).unwrap();
    assert!(!r.holds);
    assert!((r.worst_slack - r.witness_value).abs() < 1e-6);
    assert!(rnsp_check(&a, &[0], 1.0, 1.0).is_err());
}

#[test]
fn rnsp_bounds_bracket_the_optimum() {
    let mut rng = RngStream::new(9, 0);
    for _ in 0..5 {
        let a = gaussian_matrix(&mut rng, 3, 6).unwrap();
        let r = rnsp_check(&a, &[1, 4], 0.3, 0.5).unwrap();
        assert!(r.witness_value <= r.worst_slack + 1e-9);
        assert!(r.worst_slack - r.witness_value <= 1e-6 * r.worst_slack.max(1.0));
    }
}

#[test]
fn rip_angle_formula() {
    assert!((rip_to_asc_angle(0.0, 0.0, 10, 2).unwrap().unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert_eq!(rip_to_asc_angle(0.5, 0.5, 100, 1).unwrap(), None);
    let c = rip_to_asc_cos(0.1, 0.05, 12, 3).unwrap();
    let want = (0.1 + 5f64.sqrt() * 5f64.sqrt() * 0.05 / 1.1) / 0.9;
    assert!((c - want).abs() < 1e-15);
    assert!(rip_to_asc_angle(1.0, 0.0, 3, 1).is_err());
    assert!(rip_to_asc_angle(0.1, 0.1, 3, 0).is_err());
}

/// Columns of the simplex frame in ℝ^{d−1}: unit vectors with pairwise
/// inner products −1/(d−1); the kernel is spanned by the all-ones vector.
pub(crate) fn simplex_frame(d: usize) -> DMatrix<f64> {
    let centered = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / d as f64);
    let map = LinearMap::new(centered).unwrap();
    let rows = map.row_space_basis().transpose();
    let mut a = &rows * map.matrix();
    for mut c in a.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    a
}

#[test]
fn rip_angle_is_a_lower_bound_on_measured_angles() {
    let a = LinearMap::new(simplex_frame(8)).unwrap();
    assert_eq!(a.kernel_dim(), 1);
    let t = rip_constants(&a, 2).unwrap();
    assert!(t.get(1).unwrap() < 1e-12);
    assert!((t.get(2).unwrap() - 1.0 / 7.0).abs() < 1e-12);
    let theta = rip_to_asc_angle(t.get(1).unwrap(), t.get(2).unwrap(), 8, 1)
        .unwrap()
        .unwrap();
    let k = a.kernel_basis().column(0).into_owned();
    for i in 0..8 {
        for s in [1.0, -1.0] {
            let mut x0 = DVector::zeros(8);
            x0[i] = s;
            let cone = l1_descent_cone(&x0).unwrap();
            let cos = cone.project(&k).unwrap().norm().max(cone.project(&-&k).unwrap().norm());
            assert!(cos.acos() >= theta, "{} < {theta}", cos.acos());
        }
    }
}

#[test]
fn block_partition_examples() {
    let u = dv(&[5.0, -1.0, 3.0, 0.5, -4.0, 2.0]);
    let b = block_partition(&u, &[0], 2).unwrap();
    assert_eq!(b, vec![vec![4, 2], vec![5, 1], vec![3]]);
    let flat = dv(&[1.0; 6]);
    assert_eq!(
        block_partition(&flat, &[2], 2).unwrap(),
        vec![vec![0, 1], vec![3, 4], vec![5]]
    );
    assert_eq!(block_partition(&u, &[0, 1, 2, 3], 2).unwrap(), vec![vec![4, 5]]);
    assert!(block_partition(&u, &[0], 0).is_err());
}

#[test]
fn sqrt5_examples() {
    let mut x0 = DVector::zeros(30);
    for i in [3, 10, 17] {
        x0[i] = 1.0;
    }
    // u = −x0 lies in the cone with ratio 1
    let u = -&x0;
    let blocks = block_partition(&u, &[3, 10, 17], 3).unwrap();
    let tail: f64 = blocks
        .iter()
        .map(|b| b.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt())
        .sum();
    assert_eq!(tail, 0.0);
    let r = check_sqrt5_bound(&x0, 2000, &mut RngStream::new(12, 0)).unwrap();
    assert!(r.passed && r.verify());
    assert!(r.aggregates["max_ratio"] >= 1.0);
}

#[test]
fn asc_rnsp_translations() {
    let p = asc_to_rnsp(FRAC_PI_2, 2.0, &[0, 1, 2]).unwrap();
    assert!((p.gamma - 0.5).abs() < 1e-15);
    assert!((p.tau - 3f64.sqrt() / (2.0 * FRAC_PI_4.sin())).abs() < 1e-14);
    let small = asc_to_rnsp(1e-6, 1.0, &[0]).unwrap();
    assert!(small.gamma < 1.0 && small.gamma > 1.0 - 1e-12 && small.tau > 1e6);
    assert!(asc_to_rnsp(0.0, 1.0, &[0]).is_err());
    assert!(asc_to_rnsp(0.5, 0.0, &[0]).is_err());
    assert_eq!(rnsp_to_rsv_bound(0.0, 1.0).unwrap(), 0.5);
    assert!(rnsp_to_rsv_bound(1.0 - 1e-12, 1.0).unwrap() < 1e-12);
    assert!(rnsp_to_rsv_bound(1.0, 1.0).is_err());
}

#[test]
fn measured_angle_yields_rnsp() {
    let mut rng = RngStream::new(77, 0);
    let opts = RsvOptions::grid(0.01);
    let mut tried = 0;
    while tried < 3 {
        let a = gaussian_matrix(&mut rng, 2, 3).unwrap();
        let t = [0usize];
        let mut theta = f64::INFINITY;
        let mut sig = f64::INFINITY;
        for s in [1.0, -1.0] {
            let x0 = dv(&[s, 0.0, 0.0]);
            let cone = l1_descent_cone(&x0).unwrap();
            let ang = separation_angle(&a, &cone, &opts).unwrap();
            theta = theta.min(ang.bracket.unwrap().0);
            sig = sig.min(restricted_sv(&a, &cone, &opts).unwrap().sigma);
        }
        if theta <= 0.0 {
            continue;
        }
        tried += 1;
        let p = asc_to_rnsp(theta.min(FRAC_PI_2), a.sigma_min_nonzero(), &t).unwrap();
        let r = rnsp_check(&a, &p.t, p.gamma, p.tau).unwrap();
        assert!(r.holds, "{r:?}");
        let bound = rnsp_to_rsv_bound(p.gamma, p.tau).unwrap();
        assert!(bound <= sig + opts.slack(a.sigma_max()));
    }
}

#[test]
fn mu_vanishes_for_orthogonal_subspace() {
    let p = Polytope::new(
        vec![dv(&[-1.0, 0.0]), dv(&[1.0, 0.0])],
        vec![
            (dv(&[0.0, 1.0]), 0.0),
            (dv(&[0.0, -1.0]), 0.0),
            (dv(&[1.0, 0.0]), 1.0),
            (dv(&[-1.0, 0.0]), 1.0),
        ],
    )
    .unwrap();
    let est = polytope_mu(
        &p,
        &dv(&[0.5, 0.0]),
        &[dv(&[0.0, 1.0])],
        &MuOptions {
            samples: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(est.mu.abs() < 1e-12);
}

#[test]
fn mu_at_cross_polytope_vertex() {
    let p = Polytope::cross_polytope(3).unwrap();
    let u = [dv(&[0.0, 1.0, 1.0]) / SQRT_2];
    let est = polytope_mu(
        &p,
        &dv(&[1.0, 0.0, 0.0]),
        &u,
        &MuOptions {
            samples: 20_000,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((est.mu - 1.0 / 3f64.sqrt()).abs() < 1e-6, "{}", est.mu);
    assert!(est.vertex_mu <= est.mu);
}

#[test]
fn mu_constant_along_an_edge() {
    let p = Polytope::cross_polytope(3).unwrap();
    let u = [dv(&[0.0, 0.0, 1.0])];
    let opts = MuOptions {
        samples: 20_000,
        ..Default::default()
    };
    let m1 = polytope_mu(&p, &dv(&[0.3, 0.7, 0.0]), &u, &opts).unwrap().mu;
    let m2 = polytope_mu(&p, &dv(&[0.55, 0.45, 0.0]), &u, &opts).unwrap().mu;
    assert!((m1 - m2).abs() < 1e-3);
    assert!((m1 - 1.5f64.sqrt().recip()).abs() < 1e-6, "{m1}");
}

#[test]
fn mu_rejects_inadmissible_subspace() {
    let p = Polytope::cross_polytope(3).unwrap();
    let err = polytope_mu(
        &p,
        &dv(&[0.2, 0.3, 0.5]),
        &[dv(&[0.0, 0.0, 1.0])],
        &MuOptions::default(),
    );
    assert!(matches!(err, Err(crate::Error::Infeasible(_))));
    assert!(polytope_mu(
        &p,
        &dv(&[2.0, 0.0, 0.0]),
        &[dv(&[0.0, 0.0, 1.0])],
        &MuOptions::default()
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_partition_is_monotone(vals in proptest::collection::vec(-3.0f64..3.0, 2..20), s in 1usize..5, k in 0usize..3) {
        let u = DVector::from_vec(vals.clone());
        let s0: Vec<usize> = (0..k.min(vals.len())).collect();
        let blocks = block_partition(&u, &s0, s).unwrap();
        let mut seen: Vec<usize> = blocks.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (s0.len()..vals.len()).collect::<Vec<_>>());
        for (j, b) in blocks.iter().enumerate() {
            prop_assert!(b.len() <= s);
            if j + 1 < blocks.len() {
                prop_assert_eq!(b.len(), s);
                let lo = b.iter().map(|&i| u[i].abs()).fold(f64::INFINITY, f64::min);
                let hi = blocks[j + 1].iter().map(|&i| u[i].abs()).fold(0.0, f64::max);
                prop_assert!(lo >= hi);
            }
        }
    }

    #[test]
    fn rip_table_monotone(seed in 0u64..500) {
        let a = gaussian_matrix(&mut RngStream::new(seed, 0), 4, 6).unwrap();
        let t = rip_constants(&a, 4).unwrap();
        for k in 1..4 {
            prop_assert!(t.get(k).unwrap() <= t.get(k + 1).unwrap() + 1e-12);
        }
    }

    #[test]
    fn nsp_implies_recovery(seed in 0u64..500) {
        let mut rng = RngStream::new(seed, 1);
        let a = gaussian_matrix(&mut rng, 5, 8).unwrap();
        let s = rng.subset(8, 3);
        if nsp_check(&a, &s).unwrap() {
            for bits in 0..8u32 {
                let mut x0 = DVector::zeros(8);
                for (j, &i) in s.iter().enumerate() {
                    x0[i] = if bits >> j & 1 == 1 { -1.0 } else { 1.0 };
                }
                prop_assert!(exact_recovery_test(&a, &x0, 1e-6).unwrap().recovered);
            }
        }
    }
}
