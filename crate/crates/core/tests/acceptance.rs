//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with --nocapture). Tolerances are pinned in code.

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};

use sitnikov::conservative::{Conservative, SeedConfig};
use sitnikov::continuation::{
    continue_branch, Branch, BranchStatus, ContinuationConfig, ShootingBranchProblem,
};
use sitnikov::error::Error;
use sitnikov::field::{field_bounds, HomotopyField};
use sitnikov::ode::{zero_crossings, OdeOpts};
use sitnikov::par::ExecMode;
use sitnikov::primaries::{
    build_circular_polygon, build_kepler_pair, certify_symmetry, EnsembleConfig, OrbitRep,
    PrimaryEnsemble,
};
use sitnikov::shooting::{reconstruct_full, shoot, verify_solution, ShotConfig};
use sitnikov::spectral::{eigenvalue_of_index, sturm_eigenvalues, SturmConfig};

fn criterion(number: u32, name: &str, body: impl FnOnce() + UnwindSafe) {
    match catch_unwind(body) {
        Ok(()) => println!("criterion {number:02} ({name}): PASS"),
        Err(e) => {
            println!("criterion {number:02} ({name}): FAIL");
            resume_unwind(e);
        }
    }
}

fn circular() -> PrimaryEnsemble {
    build_circular_polygon(2, None, &EnsembleConfig::default()).unwrap()
}

fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn track(ensemble: &PrimaryEnsemble, p: u32, q: u32) -> Branch {
    let cons = Conservative::new(ensemble);
    let seed = cons.solve_seed(p, q, false, &SeedConfig::default()).unwrap();
    let problem = ShootingBranchProblem::new(ensemble, p, q, ShotConfig::default());
    continue_branch(&problem, p, q, seed.level.zeta, &ContinuationConfig::default()).unwrap()
}

#[test]
fn criterion_01_circular_identity_homotopy() {
    criterion(1, "circular identity homotopy", || {
        let ens = circular();
        for (p, expected_zeros) in [(1u32, 2u32), (3, 6), (5, 10)] {
            let branch = track(&ens, p, 1);
            assert_eq!(
                branch.status,
                BranchStatus::ReachedLambdaOne,
                "p = {p} must reach lambda = 1"
            );
            let drift = branch
                .points
                .iter()
                .map(|pt| (pt.zeta - branch.points[0].zeta).abs())
                .fold(0.0_f64, f64::max);
            assert!(
                drift <= 1e-10,
                "p = {p}: zeta drift {drift:.3e} exceeds 1e-10 under the identity homotopy"
            );
            for pt in &branch.points {
                assert_eq!(pt.zero_count, Some(expected_zeros), "p = {p}");
            }
        }
    });
}

#[test]
fn criterion_02_period_function_limit() {
    criterion(2, "period function limit at the well bottom", || {
        let ens = circular();
        let cons = Conservative::new(&ens);
        let e = cons.e_min() + 1e-8 * cons.e_min().abs();
        let t = cons.period(e).unwrap();
        let limit = 2.0 * std::f64::consts::PI / 32.0_f64.sqrt();
        assert!((limit - 1.110_720_734_539_591_5).abs() < 1e-12);
        assert!(
            (t - limit).abs() / limit <= 1e-4,
            "T = {t:.9} vs closed-form small-oscillation limit {limit:.9}"
        );
    });
}

#[test]
fn criterion_03_period_monotonicity_and_ivp_agreement() {
    criterion(3, "period monotone; quadrature matches IVP", || {
        let ens = circular();
        let cons = Conservative::new(&ens);
        let e_min = cons.e_min();
        // 50-point geometric energy grid: no monotonicity violations.
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let e = e_min * 0.9_f64 * 0.75_f64.powf(k as f64);
            let t = cons.period(e).unwrap();
            assert!(t > prev, "T must increase strictly (k = {k})");
            prev = t;
        }
        // 10 random energies: quadrature vs event-detection IVP to 1e-7.
        let mut state = 0x2545f4914f6cdd1d_u64;
        for _ in 0..10 {
            let e = e_min * (0.05 + 0.9 * lcg(&mut state));
            let level = cons.energy_level(e).unwrap();
            let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -cons.du0(y[0]);
            };
            let roots = zero_crossings(
                rhs,
                0.0,
                &[level.zeta, 0.0],
                3.0 * level.period,
                0,
                2,
                OdeOpts::with_tol(1e-13),
            )
            .unwrap();
            let t_ivp = 2.0 * (roots[1] - roots[0]);
            assert!(
                (level.period - t_ivp).abs() <= 1e-7,
                "E = {e:.9}: quadrature {} vs IVP {t_ivp}",
                level.period
            );
        }
    });
}

#[test]
fn criterion_04_seed_range_gate() {
    criterion(4, "seed gate at p = sqrt(beta) q", || {
        let ens = circular();
        let cons = Conservative::new(&ens);
        // sqrt(32) = 5.657: p = 5 is inside the range, p = 6 outside.
        let seed = cons.solve_seed(5, 1, false, &SeedConfig::default()).unwrap();
        assert_eq!(seed.zero_count, 10);
        for p in [6u32, 7] {
            match cons.solve_seed(p, 1, true, &SeedConfig::default()) {
                Err(Error::NoSeed { sqrt_beta, .. }) => {
                    assert!((sqrt_beta - 32.0_f64.sqrt()).abs() < 1e-12)
                }
                other => panic!("p = {p}: expected NoSeed, got {other:?}"),
            }
        }
        // In-range even p is refused for parity, not range.
        match cons.solve_seed(4, 1, false, &SeedConfig::default()) {
            Err(Error::AntiperiodicityUnattainable(4)) => {}
            other => panic!("expected parity refusal, got {other:?}"),
        }
    });
}

#[test]
fn criterion_05_end_to_end_existence_at_lambda_one() {
    criterion(5, "Kepler branches reach lambda = 1 and verify", || {
        for e in [0.1, 0.2] {
            let ens = build_kepler_pair(e, &EnsembleConfig::default()).unwrap();
            for p in [1u32, 3] {
                let branch = track(&ens, p, 1);
                assert_eq!(
                    branch.status,
                    BranchStatus::ReachedLambdaOne,
                    "e = {e}, p = {p}"
                );
                let zeta_end = branch.final_zeta().unwrap();
                let shot = shoot(&ens, zeta_end, 1.0, p, 1, &ShotConfig::default()).unwrap();
                let profile = reconstruct_full(&shot, 1e-8).unwrap();
                let report = verify_solution(&ens, &profile, 1e-6, 1e-8).unwrap();
                assert!(
                    report.passed,
                    "e = {e}, p = {p}: verification failed: {report:?}"
                );
                assert!(report.ode_residual <= 1e-6);
                assert!(report.symmetry_residuals.max() <= 1e-8);
                assert_eq!(report.zero_count, Some(2 * p));
            }
        }
    });
}

#[test]
fn criterion_06_zero_count_invariance_along_branches() {
    criterion(6, "zero counts constant along every branch", || {
        let circ = circular();
        let kep = build_kepler_pair(0.2, &EnsembleConfig::default()).unwrap();
        let cases: [(&PrimaryEnsemble, u32); 5] =
            [(&circ, 1), (&circ, 3), (&circ, 5), (&kep, 1), (&kep, 3)];
        for (ens, p) in cases {
            let branch = track(ens, p, 1);
            for pt in &branch.points {
                // Branch diagnostics use the strict dual-route count, so
                // Some(c) certifies winding/sign-change agreement.
                assert_eq!(
                    pt.zero_count,
                    Some(2 * p),
                    "p = {p}, lambda = {:.4}",
                    pt.lambda
                );
            }
        }
    });
}

#[test]
fn criterion_07_sturm_liouville_correctness() {
    criterion(7, "Sturm-Liouville eigenvalues and bounds", || {
        let cfg = SturmConfig::default();
        // Constant weights: closed form to 1e-9 relative.
        for a in [1.0, 33.0] {
            for p in 0..=6u32 {
                let res = eigenvalue_of_index(&|_| a, 1, p, a, a, &cfg).unwrap();
                let exact = (1.0 + (p as f64).powi(2)) / a;
                assert!(
                    (res.eta - exact).abs() <= 1e-9 * exact,
                    "A = {a}, p = {p}: {} vs {exact}",
                    res.eta
                );
            }
        }
        // Comparison monotonicity for nested synthetic weights.
        let f1 = |t: f64| 6.0 + 2.0 * (2.0 * t).cos().powi(2);
        let f2 = |t: f64| 8.5 + 3.0 * (2.0 * t).cos().powi(2);
        for p in 0..=5u32 {
            let a = eigenvalue_of_index(&f1, 1, p, 6.0, 8.0, &cfg).unwrap();
            let b = eigenvalue_of_index(&f2, 1, p, 8.5, 11.5, &cfg).unwrap();
            assert!(a.eta > b.eta, "p = {p}: pointwise larger weight lowers eta");
        }
        // Kepler e = 0.5: every index sits inside the comparison sandwich.
        let ens = build_kepler_pair(0.5, &EnsembleConfig::default()).unwrap();
        let bounds = field_bounds(&ens, 1024).unwrap();
        for lambda in [0.0, 0.5, 1.0] {
            let report =
                sturm_eigenvalues(&ens, lambda, 8, 1, &cfg, ExecMode::Sequential).unwrap();
            for idx in &report.indices {
                let x2 = (idx.p as f64).powi(2);
                let lo = (1.0 + x2) / bounds.weight_sup;
                let hi = (1.0 + x2) / bounds.weight_inf;
                let slack = 1e-9 * idx.eta + idx.eta_error_estimate;
                assert!(
                    idx.eta >= lo - slack && idx.eta <= hi + slack,
                    "lambda = {lambda}, p = {}: eta = {} outside [{lo}, {hi}]",
                    idx.p,
                    idx.eta
                );
            }
        }
    });
}

#[test]
fn criterion_08_gradient_and_variational_consistency() {
    criterion(8, "variational and potential derivatives match FD", || {
        let ens = build_kepler_pair(0.3, &EnsembleConfig::default()).unwrap();
        let shot_cfg = ShotConfig {
            tol: 1e-12,
            ..ShotConfig::default()
        };
        let mut state = 0x9e3779b97f4a7c15_u64;
        // dR/dzeta from the variational flow vs centered differences,
        // 20 randomized (zeta, lambda) samples at 1e-6.
        for _ in 0..20 {
            let zeta = 0.2 + 1.5 * lcg(&mut state);
            let lambda = lcg(&mut state);
            let shot = shoot(&ens, zeta, lambda, 1, 1, &shot_cfg).unwrap();
            let h = 1e-6;
            let up = shoot(&ens, zeta + h, lambda, 1, 1, &shot_cfg).unwrap();
            let dn = shoot(&ens, zeta - h, lambda, 1, 1, &shot_cfg).unwrap();
            let fd = (up.residual - dn.residual) / (2.0 * h);
            assert!(
                (shot.derivative_wrt_amplitude - fd).abs() <= 1e-6,
                "zeta = {zeta:.6}, lambda = {lambda:.6}: {} vs {fd}",
                shot.derivative_wrt_amplitude
            );
        }
        // dU/dz and d2U/dz2 vs fourth-order differences of U, 100
        // randomized (t, z, lambda) samples at 1e-7.
        for _ in 0..100 {
            let t = lcg(&mut state) * std::f64::consts::PI;
            let z = -2.0 + 4.0 * lcg(&mut state);
            let lambda = lcg(&mut state);
            let field = HomotopyField::new(&ens, lambda).unwrap();
            let h = 1e-3;
            let u = |z: f64| field.potential(t, z).u;
            let du = |z: f64| field.potential(t, z).du_dz;
            let eval = field.potential(t, z);
            let fd1 =
                (-u(z + 2.0 * h) + 8.0 * u(z + h) - 8.0 * u(z - h) + u(z - 2.0 * h)) / (12.0 * h);
            let fd2 = (-du(z + 2.0 * h) + 8.0 * du(z + h) - 8.0 * du(z - h) + du(z - 2.0 * h))
                / (12.0 * h);
            assert!((eval.du_dz - fd1).abs() <= 1e-7, "t={t:.4} z={z:.4} l={lambda:.4}");
            assert!((eval.d2u_dz2 - fd2).abs() <= 1e-7, "t={t:.4} z={z:.4} l={lambda:.4}");
        }
    });
}

#[test]
fn criterion_09_certification_discrimination() {
    criterion(9, "certification accepts exact, rejects perturbed", || {
        // Exact providers pass at 1e-10.
        for n in [2usize, 3, 4] {
            let ens = build_circular_polygon(n, None, &EnsembleConfig::default()).unwrap();
            let cert = certify_symmetry(&ens.orbits, &ens.symmetry, 1e-10, 1024).unwrap();
            assert!(cert.passed, "polygon n = {n}");
        }
        for e in [0.1, 0.5, 0.8] {
            let ens = build_kepler_pair(e, &EnsembleConfig::default()).unwrap();
            let cert = certify_symmetry(&ens.orbits, &ens.symmetry, 1e-10, 1024).unwrap();
            assert!(cert.passed, "kepler e = {e}");
        }
        // A 1 percent mass perturbation fails with the residual within a
        // factor of 2 of the injected magnitude.
        let ens = build_circular_polygon(2, None, &EnsembleConfig::default()).unwrap();
        let mut orbits = ens.orbits.clone();
        let injected_mass = 0.01 * orbits[0].mass;
        orbits[0].mass += injected_mass;
        let cert = certify_symmetry(&orbits, &ens.symmetry, 1e-8, 1024).unwrap();
        assert!(!cert.passed);
        assert!(
            cert.max_mass_residual >= injected_mass / 2.0
                && cert.max_mass_residual <= injected_mass * 2.0,
            "mass residual {} vs injected {injected_mass}",
            cert.max_mass_residual
        );
        // A 1e-3 positional perturbation fails the same way.
        let mut orbits = ens.orbits.clone();
        let injected_pos = 1e-3;
        if let OrbitRep::Circular { radius, .. } = &mut orbits[1].rep {
            *radius += injected_pos;
        }
        let cert = certify_symmetry(&orbits, &ens.symmetry, 1e-8, 1024).unwrap();
        assert!(!cert.passed);
        assert!(
            cert.max_rotation_residual >= injected_pos / 2.0
                && cert.max_rotation_residual <= injected_pos * 2.0,
            "rotation residual {} vs injected {injected_pos}",
            cert.max_rotation_residual
        );
    });
}

#[test]
fn criterion_10_energy_conservation_at_lambda_zero() {
    criterion(10, "conservative energy drift below 1e-9", || {
        let ens = circular();
        let cons = Conservative::new(&ens);
        for (p, q) in [(1u32, 1u32), (3, 1), (5, 1), (1, 2), (3, 2), (1, 3), (1, 4), (1, 5)] {
            let seed = cons.solve_seed(p, q, false, &SeedConfig::default()).unwrap();
            let prof = &seed.profile;
            let e0 = 0.5 * prof.zdot[0] * prof.zdot[0] + cons.u0(prof.z[0]);
            let drift = prof
                .z
                .iter()
                .zip(&prof.zdot)
                .map(|(&z, &zd)| (0.5 * zd * zd + cons.u0(z) - e0).abs())
                .fold(0.0_f64, f64::max);
            assert!(
                drift <= 1e-9,
                "(p, q) = ({p}, {q}): pointwise energy drift {drift:.3e}"
            );
        }
    });
}
