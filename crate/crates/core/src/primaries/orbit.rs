//! Planar primary orbits in polar form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::rootfind::newton_bisect;

/// One primary body: a positive mass on a pi-periodic planar path,
/// represented by its modulus r_j(t) and argument theta_j(t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassedOrbit {
    pub mass: f64,
    pub rep: OrbitRep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrbitRep {
    /// Uniform circular motion of fixed radius.
    Circular { radius: f64, omega: f64, phase: f64 },
    /// Keplerian ellipse around the origin focus, perihelion at t = 0.
    Kepler {
        semi_major: f64,
        eccentricity: f64,
        mean_motion: f64,
        phase: f64,
    },
    /// Trigonometric interpolant of sampled data. The argument is a
    /// linear winding plus a pi-periodic remainder.
    Sampled {
        radius: FourierSeries,
        angle_periodic: FourierSeries,
        winding_rate: f64,
    },
}

impl MassedOrbit {
    pub fn circular(mass: f64, radius: f64, omega: f64, phase: f64) -> Self {
        MassedOrbit {
            mass,
            rep: OrbitRep::Circular {
                radius,
                omega,
                phase,
            },
        }
    }

    pub fn kepler(mass: f64, semi_major: f64, eccentricity: f64, mean_motion: f64, phase: f64) -> Self {
        MassedOrbit {
            mass,
            rep: OrbitRep::Kepler {
                semi_major,
                eccentricity,
                mean_motion,
                phase,
            },
        }
    }

    /// Modulus r_j(t) > 0.
    pub fn radius(&self, t: f64) -> f64 {
        match &self.rep {
            OrbitRep::Circular { radius, .. } => *radius,
            OrbitRep::Kepler {
                semi_major,
                eccentricity,
                mean_motion,
                ..
            } => {
                let ecc_anom = eccentric_anomaly(mean_motion * t, *eccentricity);
                semi_major * (1.0 - eccentricity * ecc_anom.cos())
            }
            OrbitRep::Sampled { radius, .. } => radius.eval(t),
        }
    }

    /// Argument theta_j(t) in radians (continuous in t).
    pub fn angle(&self, t: f64) -> f64 {
        match &self.rep {
            OrbitRep::Circular { omega, phase, .. } => omega * t + phase,
            OrbitRep::Kepler {
                eccentricity,
                mean_motion,
                phase,
                ..
            } => {
                let m = mean_motion * t;
                let ecc_anom = eccentric_anomaly(m, *eccentricity);
                phase + true_anomaly_continuous(m, ecc_anom, *eccentricity)
            }
            OrbitRep::Sampled {
                angle_periodic,
                winding_rate,
                ..
            } => winding_rate * t + angle_periodic.eval(t),
        }
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        let r = self.radius(t);
        let (s, c) = self.angle(t).sin_cos();
        [r * c, r * s]
    }
}

/// Solve Kepler's equation E - e sin E = M for the eccentric anomaly.
pub fn eccentric_anomaly(mean_anomaly: f64, e: f64) -> f64 {
    if e == 0.0 {
        return mean_anomaly;
    }
    // Reduce to the principal branch; E - M is 2*pi-periodic in M.
    let two_pi = 2.0 * std::f64::consts::PI;
    let turns = (mean_anomaly / two_pi).floor();
    let m = mean_anomaly - turns * two_pi;
    let mut ecc = m + e * m.sin();
    let mut converged = false;
    for _ in 0..50 {
        let f = ecc - e * ecc.sin() - m;
        let df = 1.0 - e * ecc.cos();
        let step = f / df;
        ecc -= step;
        if step.abs() < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        // The residual is monotone in E with root inside [m - e, m + e].
        ecc = newton_bisect(
            |x| (x - e * x.sin() - m, 1.0 - e * x.cos()),
            m - e,
            m + e,
            1e-15,
        )
        .unwrap_or(ecc);
    }
    ecc + turns * two_pi
}

/// True anomaly on the branch that keeps theta continuous in t: the
/// principal value plus the accumulated turns of the mean anomaly.
fn true_anomaly_continuous(mean_anomaly: f64, ecc_anom: f64, e: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let turns = ((mean_anomaly + std::f64::consts::PI) / two_pi).floor();
    let ecc_principal = ecc_anom - turns * two_pi;
    let nu = 2.0
        * f64::atan2(
            (1.0 + e).sqrt() * (ecc_principal / 2.0).sin(),
            (1.0 - e).sqrt() * (ecc_principal / 2.0).cos(),
        );
    nu + turns * two_pi
}

/// Shared machinery for building a `Sampled` representation from closed
/// positions on a uniform grid over one period (endpoint not repeated).
pub fn polar_fit(
    positions: &[[f64; 2]],
    period: f64,
    body: usize,
    tol_origin: f64,
) -> Result<OrbitRep> {
    let n = positions.len();
    let mut radii = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    let mut theta_prev = 0.0;
    for (k, q) in positions.iter().enumerate() {
        let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
        if r < tol_origin {
            return Err(Error::OriginCrossing {
                body,
                dist: r,
                tol: tol_origin,
            });
        }
        let raw = f64::atan2(q[1], q[0]);
        let theta = if k == 0 {
            raw
        } else {
            theta_prev + wrap_to_pi(raw - theta_prev)
        };
        radii.push(r);
        angles.push(theta);
        theta_prev = theta;
    }
    // Close the loop to measure the winding number.
    let raw0 = f64::atan2(positions[0][1], positions[0][0]);
    let theta_close = theta_prev + wrap_to_pi(raw0 - theta_prev);
    let total = theta_close - angles[0];
    let winding = (total / (2.0 * std::f64::consts::PI)).round();
    if (total - winding * 2.0 * std::f64::consts::PI).abs() > 0.1 {
        return Err(Error::InvalidTable(format!(
            "body {body}: angular steps too coarse to resolve the winding number"
        )));
    }
    let winding_rate = winding * 2.0 * std::f64::consts::PI / period;
    let periodic: Vec<f64> = angles
        .iter()
        .enumerate()
        .map(|(k, &th)| th - winding_rate * (k as f64 * period / n as f64))
        .collect();
    Ok(OrbitRep::Sampled {
        radius: FourierSeries::fit(&radii, period),
        angle_periodic: FourierSeries::fit(&periodic, period),
        winding_rate,
    })
}

fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y > std::f64::consts::PI {
        y -= two_pi;
    } else if y <= -std::f64::consts::PI {
        y += two_pi;
    }
    y
}
