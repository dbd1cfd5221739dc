//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eccentricity {0} outside [0, 1)")]
    EccentricityOutOfRange(f64),

    #[error("symmetry certification failed: {0}")]
    NotCertified(String),

    #[error("body {body} passes within {dist:.3e} of the origin (tolerance {tol:.3e}); polar form undefined")]
    OriginCrossing { body: usize, dist: f64, tol: f64 },

    #[error("trajectory not periodic: closure residual {0:.3e} exceeds tolerance")]
    NotPeriodic(f64),

    #[error("invalid trajectory table: {0}")]
    InvalidTable(String),

    #[error("collision at t = {t:.6}: bodies {i} and {j} within {dist:.3e}")]
    CollisionDetected { t: f64, i: usize, j: usize, dist: f64 },

    #[error("integration tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("energy {energy:.6e} outside admissible range ({min:.6e}, 0)")]
    EnergyOutOfRange { energy: f64, min: f64 },

    #[error("no seed: p > sqrt(beta)*q (p = {p}, q = {q}, sqrt(beta) = {sqrt_beta:.6})")]
    NoSeed { p: u32, q: u32, sqrt_beta: f64 },

    #[error("anti-periodicity unattainable for even p = {0}; pass relaxed-symmetry to construct the seed in the even periodic class")]
    AntiperiodicityUnattainable(u32),

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("non-finite state at t = {0:.6}")]
    NonFiniteState(f64),

    #[error("endpoint residual {0:.3e} too large to reconstruct a solution profile")]
    ResidualTooLarge(f64),

    #[error("degenerate profile: z^2 + zdot^2 = {min:.3e} at t = {t:.6} below threshold")]
    DegenerateProfile { t: f64, min: f64 },

    #[error("zero-count mismatch: winding integral {winding:.6} vs {sign_changes} sign changes")]
    CountMismatch { winding: f64, sign_changes: u32 },

    #[error("seed invalid: {0}")]
    SeedInvalid(String),

    #[error("continuation step failure at lambda = {lambda:.6}: {reason}")]
    ContinuationStepFailure { lambda: f64, reason: String },

    #[error("zero count changed along branch at lambda = {lambda:.6}: {was} -> {now}")]
    ZeroCountViolation { lambda: f64, was: u32, now: u32 },

    #[error("eigenvalue index {p} not bracketed in the search window")]
    IndexNotBracketed { p: u32 },

    #[error("Sturm-Liouville weight not positive at t = {0:.6}")]
    WeightNotPositive(f64),

    #[error("comparison bound violated for index {p}: eta = {eta:.9e} outside [{lo:.9e}, {hi:.9e}]")]
    BoundViolated { p: u32, eta: f64, lo: f64, hi: f64 },

    #[error("analytic and scanned field bounds disagree: {0}")]
    BoundsInconsistent(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Config(_)
                | Error::InvalidTable(_)
                | Error::Io(_)
                | Error::EccentricityOutOfRange(_)
        )
    }
}
