//! Adaptive Dormand-Prince 5(4) integration.
//!
//! The right-hand sides in this crate are smooth and non-stiff, so an
//! explicit embedded pair with error-based step control is enough. Output
//! at prescribed times is produced by clamping steps onto the grid rather
//! than by interpolation, so every recorded sample is a genuine accepted
//! step at full accuracy. Event times (zero crossings of one component)
//! are refined by re-integrating short sub-steps under Newton iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on the step size; `None` lets the controller run free.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            atol: 1e-10,
            rtol: 1e-10,
            h_max: None,
            max_steps: 20_000_000,
        }
    }
}

impl OdeOpts {
    pub fn with_tol(tol: f64) -> Self {
        OdeOpts {
            atol: tol,
            rtol: tol,
            ..OdeOpts::default()
        }
    }
}

/// Step bookkeeping returned alongside results.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); 4th-order embedded weights:
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One integration in progress. `rhs(t, y, dydt)` fills the derivative.
pub struct Integrator<'a, F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    rhs: F,
    pub t: f64,
    pub y: Vec<f64>,
    /// Derivative at (t, y); kept current for FSAL reuse and Hermite brackets.
    pub dy: Vec<f64>,
    h: f64,
    opts: OdeOpts,
    pub stats: OdeStats,
    scratch: Scratch,
    _marker: std::marker::PhantomData<&'a ()>,
}

struct Scratch {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y5: Vec<f64>,
    err: Vec<f64>,
}

impl<'a, F> Integrator<'a, F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(mut rhs: F, t0: f64, y0: &[f64], opts: OdeOpts) -> Self {
        let dim = y0.len();
        let mut dy = vec![0.0; dim];
        rhs(t0, y0, &mut dy);
        let h = initial_step(&mut rhs, t0, y0, &dy, &opts);
        Integrator {
            rhs,
            t: t0,
            y: y0.to_vec(),
            dy,
            h,
            opts,
            stats: OdeStats {
                rhs_evals: 1,
                ..OdeStats::default()
            },
            scratch: Scratch {
                k: std::array::from_fn(|_| vec![0.0; dim]),
                y_stage: vec![0.0; dim],
                y5: vec![0.0; dim],
                err: vec![0.0; dim],
            },
            _marker: std::marker::PhantomData,
        }
    }

    /// Advance exactly to `t_end` (forward integration only).
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            self.step_clamped(t_end)?;
        }
        Ok(())
    }

    /// Take one accepted step, clamped so it does not pass `t_limit`.
    /// Returns (t_prev, y_prev, dy_prev) for bracketing callers.
    pub fn step_clamped(&mut self, t_limit: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let t_prev = self.t;
        let y_prev = self.y.clone();
        let dy_prev = self.dy.clone();
        let span = t_limit - self.t;
        debug_assert!(span > 0.0);

        loop {
            if self.stats.steps + self.stats.rejected > self.opts.max_steps {
                return Err(Error::IntegratorFailure(format!(
                    "step budget {} exhausted at t = {:.6}",
                    self.opts.max_steps, self.t
                )));
            }
            let mut h = self.h.min(span);
            if let Some(hm) = self.opts.h_max {
                h = h.min(hm);
            }
            if h < 1e-14 * (1.0 + self.t.abs()) {
                return Err(Error::ToleranceNotMet(format!(
                    "step size underflow ({:.3e}) at t = {:.6}",
                    h, self.t
                )));
            }
            let err = self.try_step(h);
            self.stats.rhs_evals += 6;
            if !err.is_finite() {
                return Err(Error::NonFiniteState(self.t));
            }
            if err <= 1.0 {
                // Accept.
                self.t += h;
                std::mem::swap(&mut self.y, &mut self.scratch.y5);
                (self.rhs)(self.t, &self.y, &mut self.dy);
                self.stats.rhs_evals += 1;
                self.stats.steps += 1;
                let grow = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                self.h = (h * grow).max(1e-14);
                if !self.y.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFiniteState(self.t));
                }
                return Ok((t_prev, y_prev, dy_prev));
            }
            self.stats.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    /// Attempt a step of size `h`; fills `scratch.y5` with the 5th-order
    /// result and returns the scaled error norm.
    fn try_step(&mut self, h: f64) -> f64 {
        let dim = self.y.len();
        let s = &mut self.scratch;
        s.k[0].copy_from_slice(&self.dy);
        for stage in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in s.k.iter().enumerate().take(stage) {
                    let a = A[stage - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                s.y_stage[i] = self.y[i] + h * acc;
            }
            let t_stage = self.t + C[stage] * h;
            if stage == 6 {
                // Stage 7 state is the 5th-order solution (FSAL structure).
                s.y5.copy_from_slice(&s.y_stage);
            }
            let (head, tail) = s.k.split_at_mut(stage);
            let _ = head;
            (self.rhs)(t_stage, &s.y_stage, &mut tail[0]);
        }
        // Error estimate: y5 - y4.
        let mut norm_sq = 0.0;
        for i in 0..dim {
            let mut y4 = self.y[i];
            for (j, kj) in s.k.iter().enumerate() {
                y4 += h * B4[j] * kj[i];
            }
            s.err[i] = s.y5[i] - y4;
            let scale = self.opts.atol + self.opts.rtol * self.y[i].abs().max(s.y5[i].abs());
            let r = s.err[i] / scale;
            norm_sq += r * r;
        }
        (norm_sq / dim as f64).sqrt()
    }
}

/// Hairer-style starting step guess.
fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], dy0: &[f64], opts: &OdeOpts) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let sci = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let d0 = (0..dim).map(|i| (y0[i] / sci(i)).powi(2)).sum::<f64>().sqrt() / (dim as f64).sqrt();
    let d1 = (0..dim)
        .map(|i| (dy0[i] / sci(i)).powi(2))
        .sum::<f64>()
        .sqrt()
        / (dim as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = vec![0.0; dim];
    for i in 0..dim {
        y1[i] = y0[i] + h0 * dy0[i];
    }
    let mut dy1 = vec![0.0; dim];
    rhs(t0 + h0, &y1, &mut dy1);
    let d2 = (0..dim)
        .map(|i| ((dy1[i] - dy0[i]) / sci(i)).powi(2))
        .sum::<f64>()
        .sqrt()
        / (dim as f64).sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrate from (t0, y0) and record the state at each grid time.
/// `times` must be non-decreasing with `times[0] >= t0`.
pub fn solve_to_grid<F>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    opts: OdeOpts,
) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut integ = Integrator::new(rhs, t0, y0, opts);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < integ.t - 1e-12 {
            return Err(Error::Config(format!(
                "output grid not increasing ({t} < {})",
                integ.t
            )));
        }
        if t > integ.t {
            integ.advance_to(t)?;
        }
        out.push(integ.y.clone());
    }
    Ok((out, integ.stats))
}

/// Integrate to `t_end`, returning only the final state.
pub fn solve_to<F>(rhs: F, t0: f64, y0: &[f64], t_end: f64, opts: OdeOpts) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut integ = Integrator::new(rhs, t0, y0, opts);
    integ.advance_to(t_end)?;
    Ok((integ.y, integ.stats))
}

/// Locate the first `count` times in (t0, t_max] where component `comp`
/// crosses zero, to near machine accuracy.
pub fn zero_crossings<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_max: f64,
    comp: usize,
    count: usize,
    opts: OdeOpts,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) + Copy,
{
    let mut integ = Integrator::new(rhs, t0, y0, opts);
    let mut found = Vec::new();
    while found.len() < count && integ.t < t_max {
        let (t_a, y_a, dy_a) = integ.step_clamped(t_max)?;
        let za = y_a[comp];
        let zb = integ.y[comp];
        if za == 0.0 {
            // Crossing exactly on a step boundary; already reported via zb
            // of the previous step unless this is the start point.
            continue;
        }
        if za * zb < 0.0 || zb == 0.0 {
            // Bracketed inside [t_a, t]. Start from a cubic Hermite guess.
            let h = integ.t - t_a;
            let zdot_a = dy_a[comp];
            let zdot_b = integ.dy[comp];
            let mut lo = 0.0_f64;
            let mut hi = 1.0_f64;
            let herm = |s: f64| -> f64 {
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                h00 * za + h10 * h * zdot_a + h01 * zb + h11 * h * zdot_b
            };
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if herm(lo) * herm(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut t_star = t_a + 0.5 * (lo + hi) * h;
            // Newton polish by short re-integrations from the step start.
            let mut dim_state = vec![0.0; y_a.len()];
            for _ in 0..4 {
                let (ys, _) = solve_to(rhs, t_a, &y_a, t_star, opts)?;
                let mut dys = vec![0.0; y_a.len()];
                rhs(t_star, &ys, &mut dys);
                let z = ys[comp];
                let zd = dys[comp];
                dim_state.copy_from_slice(&ys);
                if zd.abs() < 1e-300 {
                    break;
                }
                let dt = z / zd;
                t_star -= dt;
                t_star = t_star.clamp(t_a, integ.t);
                if dt.abs() < 1e-15 * (1.0 + t_star.abs()) {
                    break;
                }
            }
            found.push(t_star);
        }
    }
    Ok(found)
}
