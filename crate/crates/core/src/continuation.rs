//! Tracking the root curve zeta(lambda) of the shooting residual from a
//! lambda = 0 seed toward lambda = 1.
//!
//! Steps are natural in lambda with Newton correction in zeta; when the
//! local slope |d zeta / d lambda| exceeds a threshold the tracker
//! switches to pseudo-arclength so folds are rounded instead of fatal.
//! Each accepted point runs three monitors: zero-count preservation,
//! the sup-norm bound, and trivial-solution proximity. A branch is
//! internally sequential and deterministic; distinct branches may run
//! concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_collect, ExecMode};
use crate::primaries::PrimaryEnsemble;
use crate::shooting::{reconstruct_full, shoot, ShotConfig};

/// Scalar residual map whose root curve is tracked. The production
/// implementation shoots the satellite equation; tests substitute
/// synthetic maps with engineered folds or collapses.
pub trait BranchProblem: Sync {
    /// Residual and its amplitude derivative at (zeta, lambda).
    fn residual(&self, zeta: f64, lambda: f64) -> Result<(f64, f64)>;
    /// Diagnostics at a converged point.
    fn diagnostics(&self, zeta: f64, lambda: f64) -> Result<PointDiagnostics>;
}

#[derive(Debug, Clone, Copy)]
pub struct PointDiagnostics {
    /// None when the profile is too close to trivial to count.
    pub zero_count: Option<u32>,
    pub sup_norm: f64,
}

/// Shooting-backed problem for a fixed (p, q) and symmetry class.
pub struct ShootingBranchProblem<'a> {
    pub ensemble: &'a PrimaryEnsemble,
    pub p: u32,
    pub q: u32,
    pub shot_cfg: ShotConfig,
    /// Residual bound below which reconstruction is attempted.
    pub reconstruct_tol: f64,
}

impl<'a> ShootingBranchProblem<'a> {
    pub fn new(ensemble: &'a PrimaryEnsemble, p: u32, q: u32, shot_cfg: ShotConfig) -> Self {
        ShootingBranchProblem {
            ensemble,
            p,
            q,
            shot_cfg,
            reconstruct_tol: 1e-8,
        }
    }
}

impl BranchProblem for ShootingBranchProblem<'_> {
    fn residual(&self, zeta: f64, lambda: f64) -> Result<(f64, f64)> {
        let shot = shoot(self.ensemble, zeta, lambda, self.p, self.q, &self.shot_cfg)?;
        Ok((shot.residual, shot.derivative_wrt_amplitude))
    }

    fn diagnostics(&self, zeta: f64, lambda: f64) -> Result<PointDiagnostics> {
        let shot = shoot(self.ensemble, zeta, lambda, self.p, self.q, &self.shot_cfg)?;
        let full = reconstruct_full(&shot, self.reconstruct_tol)?;
        // Strict dual-route count; degenerate profiles surface as None
        // so the trivial monitor decides.
        match crate::shooting::count_zeros(
            &full,
            &crate::field::HomotopyField::new(self.ensemble, lambda)?,
        ) {
            Ok(c) => Ok(PointDiagnostics {
                zero_count: Some(c),
                sup_norm: full.sup_norm,
            }),
            Err(Error::DegenerateProfile { .. }) => Ok(PointDiagnostics {
                zero_count: None,
                sup_norm: full.sup_norm,
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub growth: f64,
    pub corrector_tol: f64,
    pub max_newton: usize,
    /// |d zeta / d lambda| above which stepping switches to
    /// pseudo-arclength.
    pub slope_threshold: f64,
    /// Sup-norm bound; None resolves to 1e3 times the seed amplitude.
    pub m_user: Option<f64>,
    /// Trivial-proximity threshold; None resolves to 1e-6 times the
    /// seed amplitude.
    pub epsilon1: Option<f64>,
    /// Whether (p/q)^2 falls outside the weight enclosure [m, M]; a
    /// trivial collapse under exclusion is flagged as a contradiction.
    pub excluded: bool,
    pub max_points: usize,
    pub max_folds: usize,
    pub fd_lambda: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            initial_step: 0.01,
            max_step: 0.05,
            min_step: 1e-6,
            growth: 1.3,
            corrector_tol: 1e-12,
            max_newton: 10,
            slope_threshold: 50.0,
            m_user: None,
            epsilon1: None,
            excluded: false,
            max_points: 100_000,
            max_folds: 8,
            fd_lambda: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub zeta: f64,
    pub residual: f64,
    pub dr_dzeta: f64,
    pub zero_count: Option<u32>,
    pub sup_norm: f64,
    pub step_taken: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BranchStatus {
    ReachedLambdaOne,
    FoldBeyondLimit {
        lambda_max: f64,
        turning_points: Vec<f64>,
    },
    TrivialCollapse {
        contradicts_exclusion: bool,
    },
    BoundExceeded,
    StepFailure {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub p: u32,
    pub q: u32,
    pub seed_zeta: f64,
    pub points: Vec<BranchPoint>,
    pub status: BranchStatus,
}

impl Branch {
    pub fn lambda_max(&self) -> f64 {
        self.points.iter().map(|pt| pt.lambda).fold(0.0, f64::max)
    }

    pub fn final_zeta(&self) -> Option<f64> {
        self.points.last().map(|pt| pt.zeta)
    }
}

/// Sup-norm monitor: flags escape toward infinity.
pub fn monitor_bound(sup_norm: f64, m_user: f64) -> Option<BranchStatus> {
    (sup_norm >= m_user).then_some(BranchStatus::BoundExceeded)
}

/// Trivial-proximity monitor. Under the exclusion condition a collapse
/// contradicts the neighborhood of the trivial solution, which
/// numerically indicates tolerance failure; the flag records that.
pub fn monitor_trivial(sup_norm: f64, epsilon1: f64, excluded: bool) -> Option<BranchStatus> {
    (sup_norm <= epsilon1).then_some(BranchStatus::TrivialCollapse {
        contradicts_exclusion: excluded,
    })
}

struct Tracker<'a, P: BranchProblem> {
    problem: &'a P,
    cfg: &'a ContinuationConfig,
    m_user: f64,
    epsilon1: f64,
}

impl<P: BranchProblem> Tracker<'_, P> {
    /// Newton in zeta at fixed lambda. Returns the corrected zeta with
    /// the final (residual, derivative).
    fn correct_at_lambda(&self, zeta0: f64, lambda: f64) -> Result<(f64, f64, f64)> {
        let mut zeta = zeta0;
        let mut last_abs = f64::INFINITY;
        for _ in 0..self.cfg.max_newton {
            let (r, dr) = self.problem.residual(zeta, lambda)?;
            if !r.is_finite() || !dr.is_finite() {
                return Err(Error::NonFiniteState(lambda));
            }
            if r.abs() <= self.cfg.corrector_tol {
                return Ok((zeta, r, dr));
            }
            if r.abs() > 4.0 * last_abs {
                return Err(Error::ContinuationStepFailure {
                    lambda,
                    reason: "corrector diverging".into(),
                });
            }
            last_abs = r.abs();
            if dr == 0.0 {
                return Err(Error::ContinuationStepFailure {
                    lambda,
                    reason: "zero residual derivative".into(),
                });
            }
            zeta -= r / dr;
        }
        Err(Error::ContinuationStepFailure {
            lambda,
            reason: format!("corrector not converged (|R| = {last_abs:.3e})"),
        })
    }

    /// Two-variable Newton for the pseudo-arclength system
    /// [R(zeta, lambda); tau . (u - u_pred)] = 0.
    fn correct_arclength(
        &self,
        pred: (f64, f64),
        tau: (f64, f64),
    ) -> Result<(f64, f64, f64, f64)> {
        let (mut zeta, mut lambda) = pred;
        let mut last_norm = f64::INFINITY;
        for _ in 0..self.cfg.max_newton {
            lambda = lambda.clamp(-0.2, 1.0);
            let (r, r_zeta) = self.problem.residual(zeta, lambda)?;
            let c = tau.0 * (zeta - pred.0) + tau.1 * (lambda - pred.1);
            let norm = r.abs().max(c.abs());
            if norm <= self.cfg.corrector_tol {
                return Ok((zeta, lambda, r, r_zeta));
            }
            if norm > 4.0 * last_norm {
                return Err(Error::ContinuationStepFailure {
                    lambda,
                    reason: "arclength corrector diverging".into(),
                });
            }
            last_norm = norm;
            let r_lambda = self.fd_r_lambda(zeta, lambda)?;
            let det = r_zeta * tau.1 - r_lambda * tau.0;
            if det.abs() < 1e-300 {
                return Err(Error::ContinuationStepFailure {
                    lambda,
                    reason: "singular arclength Jacobian".into(),
                });
            }
            let dz = (r * tau.1 - r_lambda * c) / det;
            let dl = (r_zeta * c - tau.0 * r) / det;
            zeta -= dz;
            lambda -= dl;
        }
        Err(Error::ContinuationStepFailure {
            lambda,
            reason: "arclength corrector not converged".into(),
        })
    }

    fn fd_r_lambda(&self, zeta: f64, lambda: f64) -> Result<f64> {
        let d = self.cfg.fd_lambda;
        let hi = (lambda + d).min(1.0);
        let lo = (lambda - d).max(0.0);
        let (r_hi, _) = self.problem.residual(zeta, hi)?;
        let (r_lo, _) = self.problem.residual(zeta, lo)?;
        Ok((r_hi - r_lo) / (hi - lo))
    }

    fn monitors(&self, diag: &PointDiagnostics) -> Option<BranchStatus> {
        if let Some(status) = monitor_trivial(diag.sup_norm, self.epsilon1, self.cfg.excluded) {
            return Some(status);
        }
        monitor_bound(diag.sup_norm, self.m_user)
    }
}

/// Track one branch from its seed. Zero-count changes are first treated
/// as step-size failures and retried; a change that persists at the
/// minimum step is a hard error.
pub fn continue_branch<P: BranchProblem>(
    problem: &P,
    p: u32,
    q: u32,
    seed_zeta: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    let expected_zeros = 2 * p;
    let tracker = Tracker {
        problem,
        cfg,
        m_user: cfg.m_user.unwrap_or(1e3 * seed_zeta.abs()),
        epsilon1: cfg.epsilon1.unwrap_or(1e-6 * seed_zeta.abs()),
    };
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut turning_points: Vec<f64> = Vec::new();

    let finish = |points: Vec<BranchPoint>, status: BranchStatus| -> Result<Branch> {
        Ok(Branch {
            p,
            q,
            seed_zeta,
            points,
            status,
        })
    };

    // Polish and record the seed point.
    let (mut zeta, r0, dr0) = match tracker.correct_at_lambda(seed_zeta, 0.0) {
        Ok(v) => v,
        Err(Error::ContinuationStepFailure { reason, .. }) => {
            return Err(Error::SeedInvalid(reason))
        }
        Err(e) => return Err(e),
    };
    let mut lambda = 0.0_f64;
    let diag = problem.diagnostics(zeta, lambda)?;
    if let Some(c) = diag.zero_count {
        if c != expected_zeros {
            return Err(Error::SeedInvalid(format!(
                "seed has {c} zeros, expected {expected_zeros}"
            )));
        }
    }
    points.push(BranchPoint {
        lambda,
        zeta,
        residual: r0,
        dr_dzeta: dr0,
        zero_count: diag.zero_count,
        sup_norm: diag.sup_norm,
        step_taken: 0.0,
    });
    if let Some(status) = tracker.monitors(&diag) {
        return finish(points, status);
    }

    let mut h = cfg.initial_step;
    let mut successes = 0usize;
    let mut prev_dlambda = 1.0_f64; // orientation of the last accepted move
    let mut prev_tau: Option<(f64, f64)> = None;

    loop {
        if lambda >= 1.0 - 1e-12 {
            return finish(points, BranchStatus::ReachedLambdaOne);
        }
        if points.len() >= cfg.max_points {
            return finish(
                points,
                BranchStatus::StepFailure {
                    reason: "point budget exhausted".into(),
                },
            );
        }

        let (_, r_zeta) = problem.residual(zeta, lambda)?;
        let r_lambda = tracker.fd_r_lambda(zeta, lambda)?;
        let slope = if r_zeta != 0.0 {
            (r_lambda / r_zeta).abs()
        } else {
            f64::INFINITY
        };
        let use_arclength = slope > cfg.slope_threshold || prev_dlambda < 0.0;

        let attempt = if !use_arclength {
            let lambda_next = (lambda + h).min(1.0);
            let zeta_pred = zeta - (r_lambda / r_zeta) * (lambda_next - lambda);
            tracker
                .correct_at_lambda(zeta_pred, lambda_next)
                .map(|(z, r, dr)| (z, lambda_next, r, dr))
        } else {
            // Tangent (-R_lambda, R_zeta), normalized, oriented along the
            // previous motion.
            let norm = (r_lambda * r_lambda + r_zeta * r_zeta).sqrt();
            let mut tau = (-r_lambda / norm, r_zeta / norm);
            let orient = match prev_tau {
                Some(pt) => tau.0 * pt.0 + tau.1 * pt.1,
                None => tau.1, // start moving toward larger lambda
            };
            if orient < 0.0 {
                tau = (-tau.0, -tau.1);
            }
            let pred = (zeta + h * tau.0, lambda + h * tau.1);
            let res = tracker.correct_arclength(pred, tau);
            if res.is_ok() {
                prev_tau = Some(tau);
            }
            res
        };

        match attempt {
            Ok((zeta_new, lambda_new, r_new, dr_new)) => {
                // Fold bookkeeping: direction reversal in lambda.
                let dlambda = lambda_new - lambda;
                let lambda_max = points.iter().map(|pt| pt.lambda).fold(0.0, f64::max);
                if dlambda * prev_dlambda < 0.0 {
                    turning_points.push(lambda.max(lambda_new));
                    if turning_points.len() > cfg.max_folds {
                        return finish(
                            points,
                            BranchStatus::FoldBeyondLimit {
                                lambda_max,
                                turning_points,
                            },
                        );
                    }
                }
                if lambda_new < 0.0 {
                    return finish(
                        points,
                        BranchStatus::FoldBeyondLimit {
                            lambda_max,
                            turning_points,
                        },
                    );
                }

                let diag = problem.diagnostics(zeta_new, lambda_new)?;
                // A sign flip of the amplitude between accepted points
                // means the curve passed through the trivial solution
                // (a root at every lambda) even if no point landed in the
                // epsilon ball.
                let crossed_trivial = zeta * zeta_new < 0.0;
                let monitor_status = tracker.monitors(&diag).or(crossed_trivial.then_some(
                    BranchStatus::TrivialCollapse {
                        contradicts_exclusion: cfg.excluded,
                    },
                ));
                if let Some(status) = monitor_status {
                    points.push(BranchPoint {
                        lambda: lambda_new,
                        zeta: zeta_new,
                        residual: r_new,
                        dr_dzeta: dr_new,
                        zero_count: diag.zero_count,
                        sup_norm: diag.sup_norm,
                        step_taken: h,
                    });
                    return finish(points, status);
                }
                if let Some(c) = diag.zero_count {
                    if c != expected_zeros {
                        // A lost zero means the step leapt past structure;
                        // shrink and retry before declaring violation.
                        h *= 0.5;
                        successes = 0;
                        if h < cfg.min_step {
                            return Err(Error::ZeroCountViolation {
                                lambda: lambda_new,
                                was: expected_zeros,
                                now: c,
                            });
                        }
                        continue;
                    }
                }

                if dlambda != 0.0 {
                    prev_dlambda = dlambda;
                }
                zeta = zeta_new;
                lambda = lambda_new;
                points.push(BranchPoint {
                    lambda,
                    zeta,
                    residual: r_new,
                    dr_dzeta: dr_new,
                    zero_count: diag.zero_count,
                    sup_norm: diag.sup_norm,
                    step_taken: h,
                });
                successes += 1;
                if successes >= 2 {
                    h = (h * cfg.growth).min(cfg.max_step);
                    successes = 0;
                }
            }
            Err(Error::ContinuationStepFailure { .. }) => {
                h *= 0.5;
                successes = 0;
                if h < cfg.min_step {
                    return finish(
                        points,
                        BranchStatus::StepFailure {
                            reason: format!("minimum step reached at lambda = {lambda:.6}"),
                        },
                    );
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Run one branch per seed amplitude, fanning out across branches.
/// Each branch is internally sequential, so results are deterministic
/// and independent of the execution mode.
pub fn continue_branches<P: BranchProblem>(
    problem_for: impl Fn(usize) -> P + Sync,
    seeds: &[(u32, u32, f64)],
    cfg: &ContinuationConfig,
    mode: ExecMode,
) -> Vec<Result<Branch>> {
    let indexed: Vec<usize> = (0..seeds.len()).collect();
    map_collect(mode, &indexed, |&i| {
        let (p, q, zeta) = seeds[i];
        continue_branch(&problem_for(i), p, q, zeta, cfg)
    })
}

/// Pairwise separation of branches over one ensemble and q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistinctnessReport {
    pub pairs: Vec<PairSeparation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSeparation {
    pub p_first: u32,
    pub p_second: u32,
    /// Smallest |zeta_1(lambda) - zeta_2(lambda)| over the overlapping
    /// lambda range. A lower bound for the sup-norm distance of the
    /// profiles, since profiles agree at t = 0 only if the amplitudes do.
    pub min_gap: f64,
    pub separated: bool,
    pub duplicate_input: bool,
}

/// Check that distinct branches never come closer than the corrector
/// tolerance except at the trivial solution, and that zero counts are
/// constant within each branch.
pub fn distinctness_check(branches: &[&Branch], tol: f64) -> Result<DistinctnessReport> {
    for b in branches {
        let mut seen: Option<u32> = None;
        for pt in &b.points {
            if let Some(c) = pt.zero_count {
                match seen {
                    None => seen = Some(c),
                    Some(prev) if prev != c => {
                        return Err(Error::ZeroCountViolation {
                            lambda: pt.lambda,
                            was: prev,
                            now: c,
                        })
                    }
                    _ => {}
                }
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..branches.len() {
        for j in (i + 1)..branches.len() {
            let (a, b) = (branches[i], branches[j]);
            if a.p == b.p && a.q == b.q {
                pairs.push(PairSeparation {
                    p_first: a.p,
                    p_second: b.p,
                    min_gap: (a.seed_zeta - b.seed_zeta).abs(),
                    separated: false,
                    duplicate_input: true,
                });
                continue;
            }
            let mut min_gap = f64::INFINITY;
            for pt in &a.points {
                if let Some(z_other) = interp_zeta(b, pt.lambda) {
                    min_gap = min_gap.min((pt.zeta - z_other).abs());
                }
            }
            pairs.push(PairSeparation {
                p_first: a.p,
                p_second: b.p,
                min_gap,
                separated: min_gap > tol,
                duplicate_input: false,
            });
        }
    }
    Ok(DistinctnessReport { pairs })
}

/// Linear interpolation of zeta(lambda) over the monotone prefix of a
/// branch.
fn interp_zeta(branch: &Branch, lambda: f64) -> Option<f64> {
    let pts = &branch.points;
    if pts.is_empty() {
        return None;
    }
    for w in pts.windows(2) {
        if w[1].lambda < w[0].lambda {
            break; // past a fold
        }
        if lambda >= w[0].lambda && lambda <= w[1].lambda {
            let span = w[1].lambda - w[0].lambda;
            if span == 0.0 {
                return Some(w[0].zeta);
            }
            let s = (lambda - w[0].lambda) / span;
            return Some(w[0].zeta + s * (w[1].zeta - w[0].zeta));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conservative::{Conservative, SeedConfig};
    use crate::primaries::{build_circular_polygon, EnsembleConfig};

    /// Root curve zeta = 1 +- sqrt(0.5 - lambda): a fold at
    /// (zeta, lambda) = (1, 0.5), kept away from the trivial solution.
    struct FoldProblem;

    impl BranchProblem for FoldProblem {
        fn residual(&self, zeta: f64, lambda: f64) -> Result<(f64, f64)> {
            let w = zeta - 1.0;
            Ok((w * w + lambda - 0.5, 2.0 * w))
        }
        fn diagnostics(&self, zeta: f64, _lambda: f64) -> Result<PointDiagnostics> {
            Ok(PointDiagnostics {
                zero_count: Some(2),
                sup_norm: zeta.abs(),
            })
        }
    }

    /// Root curve zeta(lambda) = zeta0 (1 - 2 lambda): hits zero at 1/2.
    struct CollapseProblem {
        zeta0: f64,
    }

    impl BranchProblem for CollapseProblem {
        fn residual(&self, zeta: f64, lambda: f64) -> Result<(f64, f64)> {
            Ok((zeta - self.zeta0 * (1.0 - 2.0 * lambda), 1.0))
        }
        fn diagnostics(&self, zeta: f64, _lambda: f64) -> Result<PointDiagnostics> {
            Ok(PointDiagnostics {
                zero_count: Some(2),
                sup_norm: zeta.abs(),
            })
        }
    }

    #[test]
    fn circular_branch_is_constant() {
        let ens = build_circular_polygon(2, None, &EnsembleConfig::default()).unwrap();
        let cons = Conservative::new(&ens);
        let seed = cons.solve_seed(1, 1, false, &SeedConfig::default()).unwrap();
        let problem = ShootingBranchProblem::new(&ens, 1, 1, ShotConfig::default());
        let branch =
            continue_branch(&problem, 1, 1, seed.level.zeta, &ContinuationConfig::default())
                .unwrap();
        assert_eq!(branch.status, BranchStatus::ReachedLambdaOne);
        let drift = branch
            .points
            .iter()
            .map(|pt| (pt.zeta - branch.points[0].zeta).abs())
            .fold(0.0_f64, f64::max);
        assert!(drift <= 1e-10, "zeta drift {drift:.3e} along identity homotopy");
        for pt in &branch.points {
            assert_eq!(pt.zero_count, Some(2));
            assert!(pt.residual.abs() <= 1e-12);
        }
    }

    #[test]
    fn fold_is_rounded_and_reported() {
        // Oracle: dense residual map of the synthetic problem. The root
        // set {(zeta - 1)^2 + lambda = 1/2} has its largest lambda at
        // exactly 0.5 (zeta = 1).
        let mut max_lambda_with_root = 0.0_f64;
        for li in 0..=1000 {
            let lambda = li as f64 * 0.001;
            let mut prev = f64::NAN;
            for zi in -1000..=3000 {
                let zeta = zi as f64 * 0.001;
                let w = zeta - 1.0;
                let r = w * w + lambda - 0.5;
                if prev.is_finite() && prev * r <= 0.0 {
                    max_lambda_with_root = max_lambda_with_root.max(lambda);
                }
                prev = r;
            }
        }
        assert!((max_lambda_with_root - 0.5).abs() < 2e-3);

        let cfg = ContinuationConfig {
            epsilon1: Some(1e-12),
            ..ContinuationConfig::default()
        };
        let branch = continue_branch(&FoldProblem, 1, 1, 1.0 + 0.5_f64.sqrt(), &cfg).unwrap();
        match &branch.status {
            BranchStatus::FoldBeyondLimit {
                lambda_max,
                turning_points,
            } => {
                assert!(
                    (lambda_max - 0.5).abs() < 5e-3,
                    "turning near 0.5, got {lambda_max}"
                );
                assert!(!turning_points.is_empty());
            }
            other => panic!("expected fold, got {other:?}"),
        }
    }

    #[test]
    fn collapse_is_detected_with_contradiction_flag() {
        for excluded in [false, true] {
            let cfg = ContinuationConfig {
                excluded,
                ..ContinuationConfig::default()
            };
            let branch = continue_branch(&CollapseProblem { zeta0: 1.0 }, 1, 1, 1.0, &cfg).unwrap();
            match branch.status {
                BranchStatus::TrivialCollapse {
                    contradicts_exclusion,
                } => assert_eq!(contradicts_exclusion, excluded),
                ref other => panic!("expected collapse, got {other:?}"),
            }
        }
    }

    #[test]
    fn bound_monitor_semantics() {
        assert_eq!(monitor_bound(1.0, 0.5), Some(BranchStatus::BoundExceeded));
        assert_eq!(monitor_bound(0.4, 0.5), None);
        // Spec example: m_user below the seed amplitude trips on the
        // first point.
        let cfg = ContinuationConfig {
            m_user: Some(0.5),
            ..ContinuationConfig::default()
        };
        let branch = continue_branch(&CollapseProblem { zeta0: 1.0 }, 1, 1, 1.0, &cfg).unwrap();
        assert_eq!(branch.status, BranchStatus::BoundExceeded);
        assert_eq!(branch.points.len(), 1);
    }

    #[test]
    fn distinctness_of_circular_branches() {
        let ens = build_circular_polygon(2, None, &EnsembleConfig::default()).unwrap();
        let cons = Conservative::new(&ens);
        let mut branches = Vec::new();
        for p in [1u32, 3, 5] {
            let seed = cons.solve_seed(p, 1, false, &SeedConfig::default()).unwrap();
            let problem = ShootingBranchProblem::new(&ens, p, 1, ShotConfig::default());
            branches.push(
                continue_branch(&problem, p, 1, seed.level.zeta, &ContinuationConfig::default())
                    .unwrap(),
            );
        }
        let refs: Vec<&Branch> = branches.iter().collect();
        let report = distinctness_check(&refs, 1e-10).unwrap();
        assert_eq!(report.pairs.len(), 3);
        for pair in &report.pairs {
            assert!(pair.separated, "{pair:?}");
            assert!(!pair.duplicate_input);
        }
        // Feeding the same branch twice is flagged as duplicate input.
        let dup = [&branches[0], &branches[0]];
        let report = distinctness_check(&dup, 1e-10).unwrap();
        assert!(report.pairs[0].duplicate_input);
    }
}
