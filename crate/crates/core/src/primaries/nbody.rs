//! Direct integration of the planar n-body equations, used to validate
//! analytic providers and to produce trajectory tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Integrator, OdeOpts, OdeStats};

use super::TrajectoryTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NBodyRun {
    pub table: TrajectoryTable,
    pub closure_residual: f64,
    /// |E(end) - E(0)| / |E(0)|.
    pub energy_drift: f64,
    pub momentum_drift: f64,
    pub com_drift: f64,
    pub stats: OdeStats,
}

/// Gravitational acceleration: each body is attracted toward the others.
fn accelerations(masses: &[f64], state: &[f64], out: &mut [f64]) {
    let n = masses.len();
    // state = [x1, y1, ..., xn, yn, vx1, vy1, ..., vxn, vyn]
    out[..2 * n].copy_from_slice(&state[2 * n..4 * n]);
    out[2 * n..4 * n].fill(0.0);
    for j in 0..n {
        for i in (j + 1)..n {
            let dx = state[2 * i] - state[2 * j];
            let dy = state[2 * i + 1] - state[2 * j + 1];
            let r2 = dx * dx + dy * dy;
            let inv_r3 = 1.0 / (r2 * r2.sqrt());
            out[2 * n + 2 * j] += masses[i] * dx * inv_r3;
            out[2 * n + 2 * j + 1] += masses[i] * dy * inv_r3;
            out[2 * n + 2 * i] -= masses[j] * dx * inv_r3;
            out[2 * n + 2 * i + 1] -= masses[j] * dy * inv_r3;
        }
    }
}

/// Total mechanical energy of a planar n-body state.
pub fn nbody_energy(masses: &[f64], positions: &[[f64; 2]], velocities: &[[f64; 2]]) -> f64 {
    let n = masses.len();
    let mut kinetic = 0.0;
    for (m, v) in masses.iter().zip(velocities) {
        kinetic += 0.5 * m * (v[0] * v[0] + v[1] * v[1]);
    }
    let mut potential = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            let dx = positions[i][0] - positions[j][0];
            let dy = positions[i][1] - positions[j][1];
            potential -= masses[i] * masses[j] / (dx * dx + dy * dy).sqrt();
        }
    }
    kinetic + potential
}

fn min_pair_distance(n: usize, state: &[f64]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for j in 0..n {
        for i in (j + 1)..n {
            let dx = state[2 * i] - state[2 * j];
            let dy = state[2 * i + 1] - state[2 * j + 1];
            let d = (dx * dx + dy * dy).sqrt();
            if d < best.0 {
                best = (d, j, i);
            }
        }
    }
    best
}

/// Integrate the n-body problem over [0, horizon] and sample the result
/// on a uniform grid of `rows + 1` points. Pairwise approaches below
/// `tol_collision` abort with `CollisionDetected`.
pub fn nbody_integrate(
    masses: &[f64],
    positions: &[[f64; 2]],
    velocities: &[[f64; 2]],
    horizon: f64,
    rows: usize,
    tol_collision: f64,
    opts: OdeOpts,
) -> Result<NBodyRun> {
    let n = masses.len();
    if n < 2 || positions.len() != n || velocities.len() != n {
        return Err(Error::Config("need matching masses/positions/velocities for >= 2 bodies".into()));
    }
    let mut state = Vec::with_capacity(4 * n);
    for q in positions {
        state.extend_from_slice(q);
    }
    for v in velocities {
        state.extend_from_slice(v);
    }
    let (d0, i0, j0) = min_pair_distance(n, &state);
    if d0 < tol_collision {
        return Err(Error::CollisionDetected {
            t: 0.0,
            i: i0,
            j: j0,
            dist: d0,
        });
    }

    let masses_owned = masses.to_vec();
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| accelerations(&masses_owned, y, dy);
    let mut integ = Integrator::new(rhs, 0.0, &state, opts);

    let times: Vec<f64> = (0..=rows).map(|k| k as f64 * horizon / rows as f64).collect();
    let mut table_positions: Vec<Vec<[f64; 2]>> = Vec::with_capacity(times.len());
    let record = |y: &[f64]| -> Vec<[f64; 2]> {
        (0..n).map(|j| [y[2 * j], y[2 * j + 1]]).collect()
    };
    let e0 = energy_of_state(masses, &state);
    let (px0, py0) = momentum_of_state(masses, &state);
    let (cx0, cy0) = com_of_state(masses, &state);

    table_positions.push(record(&state));
    for &t in &times[1..] {
        while integ.t < t {
            integ.step_clamped(t)?;
            let (d, i, j) = min_pair_distance(n, &integ.y);
            if d < tol_collision {
                return Err(Error::CollisionDetected {
                    t: integ.t,
                    i,
                    j,
                    dist: d,
                });
            }
        }
        table_positions.push(record(&integ.y));
    }

    let e1 = energy_of_state(masses, &integ.y);
    let (px1, py1) = momentum_of_state(masses, &integ.y);
    let (cx1, cy1) = com_of_state(masses, &integ.y);
    let table = TrajectoryTable {
        times,
        positions: table_positions,
        masses: masses.to_vec(),
    };
    Ok(NBodyRun {
        closure_residual: table.closure_residual(),
        energy_drift: (e1 - e0).abs() / e0.abs().max(1e-300),
        momentum_drift: ((px1 - px0).powi(2) + (py1 - py0).powi(2)).sqrt(),
        com_drift: ((cx1 - cx0).powi(2) + (cy1 - cy0).powi(2)).sqrt(),
        stats: integ.stats,
        table,
    })
}

fn energy_of_state(masses: &[f64], state: &[f64]) -> f64 {
    let n = masses.len();
    let pos: Vec<[f64; 2]> = (0..n).map(|j| [state[2 * j], state[2 * j + 1]]).collect();
    let vel: Vec<[f64; 2]> = (0..n)
        .map(|j| [state[2 * n + 2 * j], state[2 * n + 2 * j + 1]])
        .collect();
    nbody_energy(masses, &pos, &vel)
}

fn momentum_of_state(masses: &[f64], state: &[f64]) -> (f64, f64) {
    let n = masses.len();
    let mut px = 0.0;
    let mut py = 0.0;
    for (j, m) in masses.iter().enumerate() {
        px += m * state[2 * n + 2 * j];
        py += m * state[2 * n + 2 * j + 1];
    }
    (px, py)
}

fn com_of_state(masses: &[f64], state: &[f64]) -> (f64, f64) {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (j, m) in masses.iter().enumerate() {
        cx += m * state[2 * j];
        cy += m * state[2 * j + 1];
    }
    (cx, cy)
}
