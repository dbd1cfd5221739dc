//! The homotopy field: potential U_lambda, its z-derivatives, the
//! Sturm-Liouville weight F_lambda, and their bounds.
//!
//! Each primary's modulus is interpolated between its maximum beta_j at
//! lambda = 0 and its true radius r_j(t) at lambda = 1. Only the modulus
//! enters the satellite equation, so the field never touches angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primaries::PrimaryEnsemble;

/// Evaluator over a certified ensemble at a fixed homotopy parameter.
#[derive(Debug, Clone, Copy)]
pub struct HomotopyField<'a> {
    ensemble: &'a PrimaryEnsemble,
    lambda: f64,
}

/// U and its first two z-derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct PotentialEval {
    pub u: f64,
    pub du_dz: f64,
    pub d2u_dz2: f64,
}

impl<'a> HomotopyField<'a> {
    pub fn new(ensemble: &'a PrimaryEnsemble, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        Ok(HomotopyField { ensemble, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn ensemble(&self) -> &'a PrimaryEnsemble {
        self.ensemble
    }

    /// rho_j(t; lambda) = (1 - lambda) beta_j + lambda r_j(t). This is
    /// the modulus of the homotopy H_j directly; no 2-vector norm is
    /// formed.
    pub fn effective_radius(&self, j: usize, t: f64) -> f64 {
        let beta_j = self.ensemble.constants.beta_j[j];
        if self.lambda == 0.0 {
            return beta_j;
        }
        (1.0 - self.lambda) * beta_j + self.lambda * self.ensemble.orbits[j].radius(t)
    }

    /// U_lambda(t, z) = -sum_j m_j (rho_j^2 + z^2)^(-1/2) and its first
    /// two z-derivatives.
    pub fn potential(&self, t: f64, z: f64) -> PotentialEval {
        let z2 = z * z;
        let mut u = 0.0;
        let mut du = 0.0;
        let mut d2u = 0.0;
        for (j, orbit) in self.ensemble.orbits.iter().enumerate() {
            let rho = self.effective_radius(j, t);
            let s2 = rho * rho + z2;
            let inv_s = 1.0 / s2.sqrt();
            let inv_s3 = inv_s / s2;
            let inv_s5 = inv_s3 / s2;
            u -= orbit.mass * inv_s;
            du += orbit.mass * z * inv_s3;
            d2u += orbit.mass * (inv_s3 - 3.0 * z2 * inv_s5);
        }
        PotentialEval {
            u,
            du_dz: du,
            d2u_dz2: d2u,
        }
    }

    /// Satellite acceleration zddot = -dU/dz.
    pub fn acceleration(&self, t: f64, z: f64) -> f64 {
        let z2 = z * z;
        let mut acc = 0.0;
        for (j, orbit) in self.ensemble.orbits.iter().enumerate() {
            let rho = self.effective_radius(j, t);
            let s2 = rho * rho + z2;
            acc -= orbit.mass * z / (s2 * s2.sqrt());
        }
        acc
    }

    /// Coefficient of the variational equation yddot = -d2U/dz2(t,z) y.
    pub fn variational_coeff(&self, t: f64, z: f64) -> f64 {
        -self.potential(t, z).d2u_dz2
    }

    /// Sturm-Liouville weight F_lambda(t) = sum_j m_j rho_j^(-3) + 1.
    pub fn weight(&self, t: f64) -> f64 {
        let mut f = 1.0;
        for (j, orbit) in self.ensemble.orbits.iter().enumerate() {
            let rho = self.effective_radius(j, t);
            f += orbit.mass / (rho * rho * rho);
        }
        f
    }
}

/// Enclosure [m, M] = [beta + 1, alpha + 1] of the weight F over all
/// (t, lambda), with the grid-observed range kept for cross-checking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldBounds {
    #[serde(rename = "m")]
    pub weight_inf: f64,
    #[serde(rename = "M")]
    pub weight_sup: f64,
    pub observed_inf: f64,
    pub observed_sup: f64,
}

impl FieldBounds {
    /// The exclusion test (p/q)^2 not in [m, M].
    pub fn excludes(&self, p: u32, q: u32) -> bool {
        let x = (p as f64 / q as f64).powi(2);
        x < self.weight_inf || x > self.weight_sup
    }
}

/// Compute the weight bounds analytically and verify by grid scan.
/// A scan value escaping the analytic enclosure by more than 1e-8 marks
/// an inconsistent interpolation and is a hard error.
pub fn field_bounds(ensemble: &PrimaryEnsemble, grid: usize) -> Result<FieldBounds> {
    let weight_inf = ensemble.constants.beta + 1.0;
    let weight_sup = ensemble.constants.alpha + 1.0;
    let mut observed_inf = f64::INFINITY;
    let mut observed_sup = f64::NEG_INFINITY;
    for li in 0..=16 {
        let lambda = li as f64 / 16.0;
        let field = HomotopyField::new(ensemble, lambda)?;
        for k in 0..grid {
            let t = k as f64 * std::f64::consts::PI / grid as f64;
            let f = field.weight(t);
            observed_inf = observed_inf.min(f);
            observed_sup = observed_sup.max(f);
        }
    }
    if observed_inf < weight_inf - 1e-8 || observed_sup > weight_sup + 1e-8 {
        return Err(Error::BoundsInconsistent(format!(
            "scan range [{observed_inf:.12}, {observed_sup:.12}] escapes analytic [{weight_inf:.12}, {weight_sup:.12}]"
        )));
    }
    Ok(FieldBounds {
        weight_inf,
        weight_sup,
        observed_inf,
        observed_sup,
    })
}
