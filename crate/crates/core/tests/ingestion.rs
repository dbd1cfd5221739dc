//! Ingestion of sampled trajectories, exercised with a synthetic
//! four-body configuration carrying the same permutation structure as a
//! figure-eight-style choreography: zeta1 = (1 3)(2 4) pairs bodies with
//! their half-turn images and zeta2 = (1 2)(3 4) pairs them under time
//! reversal with a reflection.

use sitnikov::conservative::{Conservative, SeedConfig};
use sitnikov::continuation::{
    continue_branch, BranchStatus, ContinuationConfig, ShootingBranchProblem,
};
use sitnikov::field::field_bounds;
use sitnikov::primaries::{
    ingest_trajectory, EnsembleConfig, Permutation, SymmetrySpec, TrajectoryTable,
};
use sitnikov::shooting::ShotConfig;

/// Base curve: winding-one loop with an uneven (not time-even) radius.
fn gamma(t: f64) -> [f64; 2] {
    let r = 0.5 * (1.0 + 0.2 * (2.0 * t).cos() + 0.1 * (2.0 * t).sin());
    let theta = 2.0 * t + 0.2 * (2.0 * t).sin();
    [r * theta.cos(), r * theta.sin()]
}

fn four_body_table(rows: usize) -> TrajectoryTable {
    let pi = std::f64::consts::PI;
    let times: Vec<f64> = (0..=rows).map(|k| k as f64 * pi / rows as f64).collect();
    let positions = times
        .iter()
        .map(|&t| {
            let q1 = gamma(t);
            let gm = gamma(-t);
            let q2 = [gm[0], -gm[1]]; // R gamma(-t) with R = diag(1, -1)
            let q3 = [-q1[0], -q1[1]]; // half-turn image
            let q4 = [-q2[0], -q2[1]];
            vec![q1, q2, q3, q4]
        })
        .collect();
    TrajectoryTable {
        times,
        positions,
        masses: vec![0.25; 4],
    }
}

fn d2_spec() -> SymmetrySpec {
    SymmetrySpec {
        d: 2,
        zeta1: Permutation::from_one_based(&[3, 4, 1, 2]).unwrap(),
        zeta2: Permutation::from_one_based(&[2, 1, 4, 3]).unwrap(),
        reflection: [[1.0, 0.0], [0.0, -1.0]],
    }
}

#[test]
fn four_body_table_certifies_and_measures_constants() {
    let table = four_body_table(512);
    let ens = ingest_trajectory(&table, &d2_spec(), 1e-8, &EnsembleConfig::default()).unwrap();
    assert!(ens.certificate.passed);
    assert!(ens.certificate.max_rotation_residual < 1e-10);
    assert!(ens.certificate.max_reversal_residual < 1e-10);

    // Oracle: radius extrema of the base curve by dense scan.
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0_f64;
    for k in 0..200_000 {
        let t = k as f64 * std::f64::consts::PI / 200_000.0;
        let q = gamma(t);
        let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    assert!((ens.constants.alpha_j[0] - rmin).abs() < 1e-7);
    assert!((ens.constants.beta_j[0] - rmax).abs() < 1e-7);
    assert!(ens.constants.alpha_min > 0.3);
}

#[test]
fn four_body_bounds_are_one_sided_when_minima_do_not_align() {
    // The four radii do not reach their minima at a common time, so the
    // scanned supremum sits strictly inside the analytic enclosure.
    let table = four_body_table(512);
    let ens = ingest_trajectory(&table, &d2_spec(), 1e-8, &EnsembleConfig::default()).unwrap();
    let bounds = field_bounds(&ens, 2048).unwrap();
    assert!((bounds.observed_inf - bounds.weight_inf).abs() < 1e-9, "infimum attained at lambda = 0");
    assert!(bounds.observed_sup < bounds.weight_sup, "supremum strictly inside");
    assert!(bounds.observed_sup > bounds.weight_inf);
}

#[test]
fn ingested_ensemble_supports_the_full_pipeline() {
    let table = four_body_table(512);
    let ens = ingest_trajectory(&table, &d2_spec(), 1e-8, &EnsembleConfig::default()).unwrap();
    // sqrt(beta) ~ 1.9 here, so (p, q) = (1, 1) is inside the range.
    let cons = Conservative::new(&ens);
    assert!(32.0_f64.sqrt() > 1.0);
    let seed = cons.solve_seed(1, 1, false, &SeedConfig::default()).unwrap();
    let problem = ShootingBranchProblem::new(&ens, 1, 1, ShotConfig::default());
    let branch = continue_branch(
        &problem,
        1,
        1,
        seed.level.zeta,
        &ContinuationConfig::default(),
    )
    .unwrap();
    assert_eq!(branch.status, BranchStatus::ReachedLambdaOne);
    for pt in &branch.points {
        assert_eq!(pt.zero_count, Some(2));
    }
}

#[test]
fn com_violation_is_not_certified() {
    let mut table = four_body_table(256);
    for row in &mut table.positions {
        row[0][0] += 0.01; // breaks both the symmetry and the mass center
    }
    let err = ingest_trajectory(&table, &d2_spec(), 1e-8, &EnsembleConfig::default()).unwrap_err();
    assert!(
        matches!(err, sitnikov::error::Error::NotCertified(_)),
        "got {err}"
    );
}
