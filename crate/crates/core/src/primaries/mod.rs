//! Primary configurations: construction, ingestion, certification, and
//! radial constants.

mod nbody;
mod orbit;
mod symmetry;

pub use nbody::{nbody_energy, nbody_integrate, NBodyRun};
pub use orbit::{eccentric_anomaly, polar_fit, MassedOrbit, OrbitRep};
pub use symmetry::{certify_symmetry, Permutation, SymmetryCertificate, SymmetrySpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rootfind::{golden_max, golden_min};

/// Tolerances and grid sizes for ensemble construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub certify_tol: f64,
    pub certify_grid: usize,
    pub extrema_samples: usize,
    pub tol_origin: f64,
    pub tol_closure: f64,
    pub tol_mass: f64,
    pub tol_com: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            certify_tol: 1e-8,
            certify_grid: 1024,
            extrema_samples: 4096,
            tol_origin: 1e-6,
            tol_closure: 1e-6,
            tol_mass: 1e-8,
            tol_com: 1e-6,
        }
    }
}

/// Sampled planar trajectories of n bodies on [0, pi].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryTable {
    /// Strictly increasing grid with first point 0 and last point pi.
    pub times: Vec<f64>,
    /// positions[k][j] is the position of body j at times[k].
    pub positions: Vec<Vec<[f64; 2]>>,
    pub masses: Vec<f64>,
}

impl TrajectoryTable {
    pub fn n_bodies(&self) -> usize {
        self.masses.len()
    }

    /// Euclidean distance between the full configurations at t = pi and
    /// t = 0.
    pub fn closure_residual(&self) -> f64 {
        let first = &self.positions[0];
        let last = self.positions.last().unwrap();
        first
            .iter()
            .zip(last)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Structural checks that make the table readable at all.
    pub fn validate_structure(&self) -> Result<()> {
        if self.times.len() < 8 {
            return Err(Error::InvalidTable("fewer than 8 rows".into()));
        }
        if self.times.len() != self.positions.len() {
            return Err(Error::InvalidTable("row count mismatch".into()));
        }
        if self.positions.iter().any(|row| row.len() != self.n_bodies()) {
            return Err(Error::InvalidTable("column count mismatch".into()));
        }
        if self.masses.iter().any(|&m| m <= 0.0 || m.is_nan()) {
            return Err(Error::InvalidTable("non-positive mass".into()));
        }
        if self.times[0].abs() > 1e-12 {
            return Err(Error::InvalidTable("grid must start at t = 0".into()));
        }
        if (self.times.last().unwrap() - std::f64::consts::PI).abs() > 1e-9 {
            return Err(Error::InvalidTable("grid must end at t = pi".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTable("grid not strictly increasing".into()));
        }
        Ok(())
    }

    /// Spacing uniformity required by the trigonometric interpolation.
    fn validate_uniform(&self) -> Result<f64> {
        let n = self.times.len() - 1;
        let h = std::f64::consts::PI / n as f64;
        for (k, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-8 * std::f64::consts::PI {
                return Err(Error::InvalidTable(format!(
                    "grid not uniform near row {k}; trigonometric interpolation needs a uniform grid"
                )));
            }
        }
        Ok(h)
    }
}

/// Per-body radial extrema and the derived force-scale constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialConstants {
    pub alpha_j: Vec<f64>,
    pub beta_j: Vec<f64>,
    /// sum_j m_j / alpha_j^3 (upper force scale).
    pub alpha: f64,
    /// sum_j m_j / beta_j^3 (lower force scale).
    pub beta: f64,
    pub alpha_min: f64,
}

impl RadialConstants {
    /// Dense scan over one pi-period followed by golden-section
    /// refinement in the bracketing sample intervals.
    pub fn compute(orbits: &[MassedOrbit], samples: usize) -> Result<Self> {
        let pi = std::f64::consts::PI;
        let h = pi / samples as f64;
        let mut alpha_j = Vec::with_capacity(orbits.len());
        let mut beta_j = Vec::with_capacity(orbits.len());
        for orbit in orbits {
            let mut min_k = 0;
            let mut max_k = 0;
            let mut rmin = f64::INFINITY;
            let mut rmax = f64::NEG_INFINITY;
            for k in 0..samples {
                let r = orbit.radius(k as f64 * h);
                if r < rmin {
                    rmin = r;
                    min_k = k;
                }
                if r > rmax {
                    rmax = r;
                    max_k = k;
                }
            }
            let refine = |k: usize, maximize: bool| -> f64 {
                let a = (k as f64 - 1.0) * h;
                let b = (k as f64 + 1.0) * h;
                if maximize {
                    golden_max(|t| orbit.radius(t), a, b, 1e-12).1
                } else {
                    golden_min(|t| orbit.radius(t), a, b, 1e-12).1
                }
            };
            let lo = refine(min_k, false).min(rmin);
            let hi = refine(max_k, true).max(rmax);
            if lo <= 0.0 || lo.is_nan() {
                return Err(Error::OriginCrossing {
                    body: alpha_j.len(),
                    dist: lo,
                    tol: 0.0,
                });
            }
            alpha_j.push(lo);
            beta_j.push(hi);
        }
        let alpha = orbits
            .iter()
            .zip(&alpha_j)
            .map(|(o, &a)| o.mass / (a * a * a))
            .sum();
        let beta = orbits
            .iter()
            .zip(&beta_j)
            .map(|(o, &b)| o.mass / (b * b * b))
            .sum();
        let alpha_min = alpha_j.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(RadialConstants {
            alpha_j,
            beta_j,
            alpha,
            beta,
            alpha_min,
        })
    }
}

/// A certified primary configuration with its radial constants.
/// Immutable after construction; shared read-only across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimaryEnsemble {
    pub orbits: Vec<MassedOrbit>,
    pub symmetry: SymmetrySpec,
    pub certificate: SymmetryCertificate,
    pub constants: RadialConstants,
}

impl PrimaryEnsemble {
    /// Certify and compute constants; fails unless the certificate passes.
    pub fn new(
        orbits: Vec<MassedOrbit>,
        symmetry: SymmetrySpec,
        config: &EnsembleConfig,
    ) -> Result<Self> {
        let certificate = certify_symmetry(&orbits, &symmetry, config.certify_tol, config.certify_grid)?;
        if !certificate.passed {
            return Err(Error::NotCertified(format!(
                "rotation {:.3e}, reversal {:.3e}, mass {:.3e} vs tolerance {:.1e}",
                certificate.max_rotation_residual,
                certificate.max_reversal_residual,
                certificate.max_mass_residual,
                certificate.tolerance
            )));
        }
        let constants = RadialConstants::compute(&orbits, config.extrema_samples)?;
        Ok(PrimaryEnsemble {
            orbits,
            symmetry,
            certificate,
            constants,
        })
    }

    pub fn n_bodies(&self) -> usize {
        self.orbits.len()
    }

    /// Sample the ensemble onto a trajectory table (uniform grid with the
    /// endpoint row included).
    pub fn sample_table(&self, rows: usize) -> TrajectoryTable {
        let pi = std::f64::consts::PI;
        let times: Vec<f64> = (0..=rows).map(|k| k as f64 * pi / rows as f64).collect();
        let positions = times
            .iter()
            .map(|&t| self.orbits.iter().map(|o| o.position(t)).collect())
            .collect();
        TrajectoryTable {
            times,
            positions,
            masses: self.orbits.iter().map(|o| o.mass).collect(),
        }
    }
}

/// n equal masses at the vertices of a regular n-gon rotating with
/// angular velocity 2, so the motion is pi-periodic. The radius solves
/// the force balance omega^2 a^3 = (1/(4n)) sum_k csc(pi k / n).
pub fn build_circular_polygon(
    n: usize,
    d: Option<u32>,
    config: &EnsembleConfig,
) -> Result<PrimaryEnsemble> {
    if n < 2 {
        return Err(Error::Config("polygon needs n >= 2".into()));
    }
    let d = d.unwrap_or(n as u32);
    if d < 2 || !n.is_multiple_of(d as usize) {
        return Err(Error::Config(format!("d = {d} must divide n = {n} and be >= 2")));
    }
    let csc_sum: f64 = (1..n)
        .map(|k| 1.0 / (std::f64::consts::PI * k as f64 / n as f64).sin())
        .sum();
    let omega = 2.0;
    let a = (csc_sum / (4.0 * n as f64 * omega * omega)).cbrt();
    let mass = 1.0 / n as f64;
    let orbits: Vec<MassedOrbit> = (0..n)
        .map(|j| {
            MassedOrbit::circular(mass, a, omega, 2.0 * std::f64::consts::PI * j as f64 / n as f64)
        })
        .collect();
    let shift = n / d as usize;
    let symmetry = SymmetrySpec {
        d,
        zeta1: Permutation::new((0..n).map(|j| (j + shift) % n).collect())?,
        zeta2: Permutation::new((0..n).map(|j| (n - j) % n).collect())?,
        reflection: [[1.0, 0.0], [0.0, -1.0]],
    };
    PrimaryEnsemble::new(orbits, symmetry, config)
}

/// Two equal masses on symmetric Keplerian ellipses of orbital period pi.
/// The semi-major axis 2^(-5/3) follows from the period law and does not
/// depend on the eccentricity.
pub fn build_kepler_pair(e: f64, config: &EnsembleConfig) -> Result<PrimaryEnsemble> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::EccentricityOutOfRange(e));
    }
    let a = (1.0 / 32.0_f64).cbrt();
    let mean_motion = 2.0;
    let orbits = vec![
        MassedOrbit::kepler(0.5, a, e, mean_motion, 0.0),
        MassedOrbit::kepler(0.5, a, e, mean_motion, std::f64::consts::PI),
    ];
    let symmetry = SymmetrySpec {
        d: 2,
        zeta1: Permutation::new(vec![1, 0])?,
        zeta2: Permutation::identity(2),
        reflection: [[1.0, 0.0], [0.0, -1.0]],
    };
    PrimaryEnsemble::new(orbits, symmetry, config)
}

/// Polar-decompose a validated table into interpolated orbits without
/// certifying; `ingest_trajectory` builds on this, and the certify
/// command uses it directly so failing data still yields a residual
/// report.
pub fn fit_orbits(table: &TrajectoryTable, config: &EnsembleConfig) -> Result<Vec<MassedOrbit>> {
    table.validate_structure()?;
    let closure = table.closure_residual();
    if closure > config.tol_closure {
        return Err(Error::NotPeriodic(closure));
    }
    table.validate_uniform()?;

    // Interpolate on the open grid; drop the duplicate endpoint row.
    let n_rows = table.times.len() - 1;
    let n_bodies = table.n_bodies();
    let mut orbits = Vec::with_capacity(n_bodies);
    for j in 0..n_bodies {
        let track: Vec<[f64; 2]> = (0..n_rows).map(|k| table.positions[k][j]).collect();
        let rep = polar_fit(&track, std::f64::consts::PI, j, config.tol_origin)?;
        orbits.push(MassedOrbit {
            mass: table.masses[j],
            rep,
        });
    }
    Ok(orbits)
}

/// Build an ensemble from sampled trajectories: polar-decompose each
/// body, fit trigonometric interpolants, certify the claimed symmetry,
/// and compute the radial constants.
pub fn ingest_trajectory(
    table: &TrajectoryTable,
    spec: &SymmetrySpec,
    tol: f64,
    config: &EnsembleConfig,
) -> Result<PrimaryEnsemble> {
    let orbits = fit_orbits(table, config)?;
    let certificate = certify_symmetry(&orbits, spec, tol, config.certify_grid)?;
    if !certificate.passed {
        return Err(Error::NotCertified(format!(
            "rotation {:.3e}, reversal {:.3e}, mass {:.3e} vs tolerance {:.1e}",
            certificate.max_rotation_residual,
            certificate.max_reversal_residual,
            certificate.max_mass_residual,
            certificate.tolerance
        )));
    }

    let mass_sum: f64 = table.masses.iter().sum();
    if (mass_sum - 1.0).abs() > config.tol_mass.max(tol) {
        return Err(Error::NotCertified(format!(
            "masses sum to {mass_sum:.12}, expected 1"
        )));
    }
    let com_residual = table
        .positions
        .iter()
        .map(|row| {
            let (mut cx, mut cy) = (0.0, 0.0);
            for (q, &m) in row.iter().zip(&table.masses) {
                cx += m * q[0];
                cy += m * q[1];
            }
            (cx * cx + cy * cy).sqrt()
        })
        .fold(0.0_f64, f64::max);
    if com_residual > config.tol_com {
        return Err(Error::NotCertified(format!(
            "center of mass drifts by {com_residual:.3e}"
        )));
    }

    let constants = RadialConstants::compute(&orbits, config.extrema_samples)?;
    Ok(PrimaryEnsemble {
        orbits,
        symmetry: spec.clone(),
        certificate,
        constants,
    })
}
