use ssc_core::bnb::{maximize_norm, verify_certificate, BnbConfig, GlobalStatus};
use ssc_core::geometry::{squared_norm, ConeKind, FactorMatrix, Polytope, SecondOrderCone, Tolerances};
use ssc_core::lp::{cone_member, coordinate_range, maximize_linear, minimize_linear};
use ssc_core::oracle::{enumerate_vertices, exact_max_norm, OracleLimits};
use ssc_core::relax::{node_upper_bound, secant_overestimator, tighten_box};
use ssc_core::ssc::{check_ncssc, check_ssc, sparsity_screen, Reason, SscOptions, Verdict};
use ssc_core::synth::{generate, generate_raw, run_grid, GenSpec, GridSpec};

const EPS: f64 = 1e-9;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn unit(i: usize, r: usize) -> Vec<f64> {
    let mut v = vec![0.0; r];
    v[i] = 1.0;
    v
}

fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= eps)
}

fn contains_point(set: &[Vec<f64>], x: &[f64]) -> bool {
    set.iter().any(|v| close(v, x, 1e-7))
}

fn identity_plus_all_pairs() -> FactorMatrix {
    FactorMatrix::from_rows(&[
        [1.0, 0.0, 0.0, 0.0, 1.0, 1.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
    ])
    .unwrap()
}

// core

#[test]
fn cone_membership_examples() {
    let c3 = SecondOrderCone::new(3, ConeKind::Inner).unwrap();
    assert!(c3.contains(&[1.0, 1.0, 1.0], EPS).unwrap());
    for r in 2..8 {
        let c = SecondOrderCone::new(r, ConeKind::Inner).unwrap();
        let mut x = vec![1.0; r];
        x[0] = 0.0;
        assert!(c.contains(&x, EPS).unwrap(), "e - e_1 on the border, r = {r}");
    }
    let dual = SecondOrderCone::new(2, ConeKind::Dual).unwrap();
    assert!(!dual.contains(&[1.0, -1.0], EPS).unwrap());
    assert!(SecondOrderCone::new(1, ConeKind::Inner).is_err());
}

#[test]
fn polytope_boxes() {
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    assert_eq!(p.lower, vec![-1.0; 3]);
    assert_eq!(p.upper, vec![1.0; 3]);
    assert!(p.contains(&[0.2, 0.3, 0.5], EPS));
    assert!(!p.contains(&[1.2, -0.1, -0.1], EPS));

    let p3 = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), false);
    assert_eq!(p3.lower, vec![-1.0; 3]);
    let p5 = Polytope::for_matrix(&FactorMatrix::all_pairs(5).unwrap(), false);
    assert_eq!(p5.lower, vec![-3.0; 5]);
    assert_eq!(p5.upper, vec![1.0; 5]);
}

// lp

#[test]
fn cone_member_identity_witness() {
    let h = FactorMatrix::identity(3).unwrap();
    let res = cone_member(&h, &[0.0, 1.0, 1.0], EPS).unwrap();
    let y = res.point.expect("member");
    assert!(close(&y, &[0.0, 1.0, 1.0], 1e-12));
}

#[test]
fn cone_member_single_column_certificate() {
    let h = FactorMatrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
    let v = [0.0, 1.0, 1.0];
    let res = cone_member(&h, &v, EPS).unwrap();
    assert!(res.point.is_none());
    let p = res.certificate.expect("farkas certificate");
    assert!(h.transpose_times(&p).iter().all(|&t| t >= -EPS));
    assert!(p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() < -EPS);
}

#[test]
fn cone_member_all_pairs_uses_first_column() {
    // Columns are stored with unit 1-norm, so column 1 is (e - e_1)/2.
    let h = FactorMatrix::all_pairs(3).unwrap();
    let y = cone_member(&h, &[0.0, 1.0, 1.0], EPS)
        .unwrap()
        .point
        .expect("member");
    assert!(close(&y, &[2.0, 0.0, 0.0], 1e-9));
}

#[test]
fn maximize_linear_examples() {
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    let res = maximize_linear(&p, &[1.0, 0.0, 0.0]).unwrap();
    assert!((res.objective - 1.0).abs() < EPS);
    assert!(close(res.point.as_ref().unwrap(), &[1.0, 0.0, 0.0], EPS));

    let res = maximize_linear(&p, &[1.0, 1.0, 1.0]).unwrap();
    assert!((res.objective - 1.0).abs() < EPS);
    let x = res.point.unwrap();
    assert!(
        (0..3).any(|i| close(&x, &unit(i, 3), EPS)),
        "vertex expected, got {x:?}"
    );

    let q = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), true);
    let res = maximize_linear(&q, &[-1.0, 0.0, 0.0]).unwrap();
    assert!((res.objective - 1.0).abs() < EPS);
    let x = res.point.unwrap();
    assert!((x[0] + 1.0).abs() < EPS);
    assert!(close(&x, &[-1.0, 1.0, 1.0], EPS));
}

#[test]
fn coordinate_range_examples() {
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    let (lo, hi) = coordinate_range(&p, 0).unwrap().unwrap();
    assert!(lo.abs() < EPS && (hi - 1.0).abs() < EPS);

    let p5 = Polytope::for_matrix(&FactorMatrix::all_pairs(5).unwrap(), false);
    let (lo, hi) = coordinate_range(&p5, 0).unwrap().unwrap();
    assert!((lo + 3.0).abs() < EPS && (hi - 1.0).abs() < EPS);

    let p3 = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), true);
    let (lo, hi) = coordinate_range(&p3, 0).unwrap().unwrap();
    assert!((lo + 1.0).abs() < EPS && (hi - 1.0).abs() < EPS);
}

// relax

#[test]
fn secant_examples() {
    for r in 1..6 {
        let s = secant_overestimator(&vec![-1.0; r], &vec![1.0; r]).unwrap();
        assert!(s.slope.iter().all(|&a| a == 0.0));
        assert_eq!(s.offset, r as f64);
    }
    let s = secant_overestimator(&[0.0; 3], &[1.0; 3]).unwrap();
    assert_eq!(s.slope, vec![1.0; 3]);
    assert_eq!(s.offset, 0.0);

    let s = secant_overestimator(&[2.0], &[6.0]).unwrap();
    assert_eq!(s.slope, vec![8.0]);
    assert_eq!(s.offset, -12.0);
    assert_eq!(s.eval(&[2.0]), 4.0);
    assert_eq!(s.eval(&[6.0]), 36.0);
}

#[test]
fn node_bound_examples() {
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    let loose = node_upper_bound(&p, &[-1.0; 3], &[1.0; 3]).unwrap();
    assert!((loose.ub - 3.0).abs() < EPS);
    let (lo, hi) = tighten_box(&p, &[-1.0; 3], &[1.0; 3]).unwrap().unwrap();
    assert!(close(&lo, &[0.0; 3], EPS) && close(&hi, &[1.0; 3], EPS));
    let tight = node_upper_bound(&p, &lo, &hi).unwrap();
    assert!((tight.ub - 1.0).abs() < EPS);

    let empty = node_upper_bound(&p, &[0.6; 3], &[1.0; 3]).unwrap();
    assert_eq!(empty.ub, f64::NEG_INFINITY);
    assert!(empty.relax_point.is_none());

    let q = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), true);
    assert!(q.contains(&[-1.0, 1.0, 1.0], EPS));
    assert!(node_upper_bound(&q, &[-1.0; 3], &[1.0; 3]).unwrap().ub >= 3.0 - EPS);
}

// bnb

fn pool_cfg() -> BnbConfig {
    BnbConfig {
        pool_mode: true,
        ..Default::default()
    }
}

#[test]
fn bnb_identity_converges_with_units_in_pool() {
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    let res = maximize_norm(&p, &tol(), &pool_cfg()).unwrap();
    assert_eq!(res.status, GlobalStatus::Converged);
    assert!((res.best_value - 1.0).abs() < 1e-9);
    assert_eq!(res.pool.len(), 3);
    for i in 0..3 {
        assert!(res.pool.near(&unit(i, 3), 1e-6));
    }
}

#[test]
fn bnb_all_pairs_exceeds_threshold() {
    let h = FactorMatrix::all_pairs(3).unwrap();
    let p = Polytope::for_matrix(&h, true);
    let res = maximize_norm(&p, &tol(), &BnbConfig::default()).unwrap();
    assert_eq!(res.status, GlobalStatus::ThresholdExceeded);
    assert!(res.best_value >= 3.0 - 1e-9);
    assert!(verify_certificate(&h, &res.best_point, &tol()));
}

#[test]
fn bnb_identity_plus_all_pairs_pool_is_units() {
    let p = Polytope::for_matrix(&identity_plus_all_pairs(), true);
    let res = maximize_norm(&p, &tol(), &pool_cfg()).unwrap();
    assert_eq!(res.status, GlobalStatus::Converged);
    assert!((res.best_value - 1.0).abs() < 1e-9);
    assert_eq!(res.pool.len(), 3);
    for i in 0..3 {
        assert!(res.pool.near(&unit(i, 3), 1e-6));
    }
}

#[test]
fn verify_certificate_examples() {
    let ap = FactorMatrix::all_pairs(3).unwrap();
    assert!(verify_certificate(&ap, &[-1.0, 1.0, 1.0], &tol()));
    let id = FactorMatrix::identity(3).unwrap();
    assert!(!verify_certificate(&id, &[1.0, 0.0, 0.0], &tol()));
    assert!(!verify_certificate(&id, &[2.0, -0.5, -0.5], &tol()));
}

// oracle

#[test]
fn oracle_vertex_examples() {
    let lim = OracleLimits::default();
    let p = Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true);
    let v = enumerate_vertices(&p, &lim, &tol()).unwrap().vertices;
    assert_eq!(v.len(), 3);
    for i in 0..3 {
        assert!(contains_point(&v, &unit(i, 3)));
    }

    let q = Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), true);
    let v = enumerate_vertices(&q, &lim, &tol()).unwrap().vertices;
    for x in [[-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]] {
        assert!(contains_point(&v, &x));
    }
    // The triangle has no other vertices; each e_i is an edge midpoint.
    assert_eq!(v.len(), 3);
    assert!(!contains_point(&v, &unit(0, 3)));
    assert!(q.contains(&unit(0, 3), EPS));

    let empty = p.with_box(vec![0.6; 3], vec![1.0; 3]).unwrap();
    assert!(enumerate_vertices(&empty, &lim, &tol())
        .unwrap()
        .vertices
        .is_empty());
}

#[test]
fn oracle_exact_max_examples() {
    let lim = OracleLimits::default();
    let m = exact_max_norm(
        &Polytope::for_matrix(&FactorMatrix::identity(3).unwrap(), true),
        &lim,
        &tol(),
    )
    .unwrap();
    assert!((m.value - 1.0).abs() < 1e-12);
    assert_eq!(m.maximizers.len(), 3);

    let m = exact_max_norm(
        &Polytope::for_matrix(&FactorMatrix::all_pairs(3).unwrap(), true),
        &lim,
        &tol(),
    )
    .unwrap();
    assert!((m.value - 3.0).abs() < 1e-12);
    assert_eq!(m.maximizers.len(), 3);
    for x in [[-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]] {
        assert!(contains_point(&m.maximizers, &x));
    }

    let m = exact_max_norm(
        &Polytope::for_matrix(&identity_plus_all_pairs(), true),
        &lim,
        &tol(),
    )
    .unwrap();
    assert!((m.value - 1.0).abs() < 1e-12);
    assert_eq!(m.maximizers.len(), 3);
    for i in 0..3 {
        assert!(contains_point(&m.maximizers, &unit(i, 3)));
    }
}

// ssc

#[test]
fn ncssc_examples() {
    let id = check_ncssc(&FactorMatrix::identity(3).unwrap(), &tol()).unwrap();
    assert!(id.holds && id.witnesses_verified);
    for (i, y) in id.witnesses.iter().enumerate() {
        let mut v = vec![1.0; 3];
        v[i] = 0.0;
        assert!(close(y, &v, 1e-12));
    }
    for r in 3..7 {
        let rep = check_ncssc(&FactorMatrix::all_pairs(r).unwrap(), &tol()).unwrap();
        assert!(rep.holds);
        for (i, y) in rep.witnesses.iter().enumerate() {
            let mut want = vec![0.0; r];
            want[i] = (r - 1) as f64;
            assert!(close(y, &want, 1e-9), "r = {r}, i = {i}: {y:?}");
        }
    }
    let ones = FactorMatrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
    let rep = check_ncssc(&ones, &tol()).unwrap();
    assert!(!rep.holds);
    assert_eq!(rep.failed_index, Some(0));
    assert!(rep.farkas_certificate.is_some());
}

#[test]
fn check_ssc_identity_holds() {
    for r in 3..=10 {
        let rep = check_ssc(&FactorMatrix::identity(r).unwrap(), &SscOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds, "r = {r}");
        assert_eq!(rep.reason, Reason::AllChecksPassed);
    }
}

#[test]
fn check_ssc_all_pairs_fails_on_norm() {
    for r in 3..=6 {
        let h = FactorMatrix::all_pairs(r).unwrap();
        let rep = check_ssc(&h, &SscOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.reason, Reason::NormExceedsOne);
        let cert = rep.certificate.unwrap();
        assert!(cert.verified);
        assert!(verify_certificate(&h, &cert.point, &tol()));
    }
}

#[test]
fn check_ssc_one_sparse_missing_unit_fails() {
    let h =
        FactorMatrix::from_rows(&[[1.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 1.0]]).unwrap();
    let rep = check_ssc(&h, &SscOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Fails);
    assert_eq!(rep.reason, Reason::NcsscFailed);
}

#[test]
fn sparsity_screen_examples() {
    assert!(sparsity_screen(&FactorMatrix::identity(3).unwrap(), EPS));
    let pos = FactorMatrix::from_row_major(3, 9, &(1..=27).map(|v| v as f64).collect::<Vec<_>>()).unwrap();
    assert!(!sparsity_screen(&pos, EPS));
    assert!(!sparsity_screen(&FactorMatrix::all_pairs(4).unwrap(), EPS));
}

// synth

fn column(data: &[f64], r: usize, n: usize, j: usize) -> Vec<f64> {
    (0..r).map(|i| data[i * n + j]).collect()
}

#[test]
fn synth_examples() {
    let (r, n) = (5, 10);
    let data = generate_raw(&GenSpec { r, n, k: 1, seed: 11 }).unwrap();
    for j in 0..n {
        let c = column(&data, r, n, j);
        assert!((0..r).any(|i| c == unit(i, r)));
    }

    let (r, n) = (4, 8);
    let data = generate_raw(&GenSpec { r, n, k: 3, seed: 5 }).unwrap();
    for j in 0..n {
        let c = column(&data, r, n, j);
        assert_eq!(c.iter().filter(|&&v| v == 0.0).count(), 1);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

fn covers_units(h: &FactorMatrix) -> bool {
    let r = h.rank();
    (0..r).all(|i| (0..h.ncols()).any(|j| h.column(j) == unit(i, r).as_slice()))
}

#[test]
fn one_sparse_grid_counts_match_coverage() {
    let grid = GridSpec {
        r_values: vec![3],
        k_values: vec![1],
        n_multipliers: vec![10],
        trials: 20,
        seed_base: 900,
        options: SscOptions::default(),
    };
    let recs = run_grid(&grid, |_| {}).unwrap();
    assert_eq!(recs.len(), 1);
    let covered = (0..20)
        .filter(|t| {
            covers_units(
                &generate(&GenSpec {
                    r: 3,
                    n: 30,
                    k: 1,
                    seed: 900 + t,
                })
                .unwrap(),
            )
        })
        .count();
    assert_eq!(recs[0].ssc_count, covered);
    assert_eq!(run_grid(&grid, |_| {}).unwrap()[0].ssc_count, covered);
}

#[test]
fn squared_norm_of_all_pairs_certificate() {
    assert_eq!(squared_norm(&[-1.0, 1.0, 1.0]), 3.0);
    let ap = FactorMatrix::all_pairs(3).unwrap();
    let lo = minimize_linear(&Polytope::for_matrix(&ap, true), &[1.0, 0.0, 0.0]).unwrap();
    assert!((lo.objective + 1.0).abs() < EPS);
}
