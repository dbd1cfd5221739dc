//! Trigonometric interpolation of uniformly sampled periodic data.
//!
//! Values evaluate through a complex Horner recurrence, so the cost per
//! evaluation is a handful of multiplies per retained mode with a single
//! sin/cos pair for the base angle. Trailing modes below a relative
//! floor are dropped; smooth orbits collapse to a few modes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierSeries {
    period: f64,
    mean: f64,
    /// Coefficients of cos(2*pi*m*t/period), m = 1..
    cos: Vec<f64>,
    /// Coefficients of sin(2*pi*m*t/period), m = 1..
    sin: Vec<f64>,
}

impl FourierSeries {
    /// Fit N uniform samples taken at t_k = k*period/N, k = 0..N-1.
    pub fn fit(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let m_max = n / 2;
        let mut cos = Vec::with_capacity(m_max);
        let mut sin = Vec::with_capacity(m_max);
        for m in 1..=m_max {
            let mut ac = 0.0;
            let mut as_ = 0.0;
            let w = 2.0 * std::f64::consts::PI * m as f64 / nf;
            for (k, &v) in samples.iter().enumerate() {
                let ang = w * k as f64;
                ac += v * ang.cos();
                as_ += v * ang.sin();
            }
            let scale = if 2 * m == n { 1.0 / nf } else { 2.0 / nf };
            cos.push(ac * scale);
            sin.push(as_ * scale);
        }
        // Nyquist mode of an even-length fit has no sine component.
        if n.is_multiple_of(2) {
            if let Some(last) = sin.last_mut() {
                *last = 0.0;
            }
        }
        let mut series = FourierSeries {
            period,
            mean,
            cos,
            sin,
        };
        // DFT rounding noise sits near 1e-14 relative; cut just above it.
        series.truncate(1e-13);
        series
    }

    /// Drop trailing modes whose magnitude is below `rel_floor` times the
    /// largest coefficient.
    fn truncate(&mut self, rel_floor: f64) {
        let peak = self
            .cos
            .iter()
            .chain(self.sin.iter())
            .fold(self.mean.abs(), |a, &b| a.max(b.abs()));
        let floor = peak * rel_floor;
        let mut keep = 0;
        for m in 0..self.cos.len() {
            if self.cos[m].abs() > floor || self.sin[m].abs() > floor {
                keep = m + 1;
            }
        }
        self.cos.truncate(keep);
        self.sin.truncate(keep);
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let theta = 2.0 * std::f64::consts::PI * t / self.period;
        // sum_m (c_m - i s_m) e^{i m theta}, real part, via Horner.
        let (zs, zc) = theta.sin_cos();
        let mut re = 0.0;
        let mut im = 0.0;
        for m in (0..self.cos.len()).rev() {
            let nr = re * zc - im * zs + self.cos[m];
            let ni = re * zs + im * zc - self.sin[m];
            re = nr;
            im = ni;
        }
        // Multiply the accumulated polynomial by e^{i theta} once more.
        self.mean + re * zc - im * zs
    }
}
