//! Embedding-magnitude decay under repeated shrinking updates
//! `w ← w · (1 − 2·η·error)`, with the error held constant within an epoch.

use crate::error::{Error, Result};
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct DecayTrajectory {
    pub eta: f64,
    pub errors: Vec<f64>,
    pub iters_per_epoch: usize,
    /// `values[t]` is the magnitude after `t` updates; `values[0] = w0`.
    pub values: Vec<f64>,
    /// Set when some epoch has `2·η·error ≥ 1`, where updates overshoot zero.
    pub sign_flip: bool,
}

impl DecayTrajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory always holds w0")
    }

    /// Closed form `w0 · Π_t (1 − 2·η·error(t))`, grouping each epoch into one power.
    pub fn closed_form(&self, t: usize) -> f64 {
        let mut value = self.values[0];
        let mut remaining = t;
        for &err in &self.errors {
            let k = remaining.min(self.iters_per_epoch);
            value *= (1.0 - 2.0 * self.eta * err).powi(k as i32);
            remaining -= k;
            if remaining == 0 {
                break;
            }
        }
        value
    }

    /// `iter,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,value")?;
        for (t, v) in self.values.iter().enumerate() {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Runs `iters_per_epoch` updates for each entry of `errors`.
pub fn decay_simulation(w0: f64, eta: f64, errors: &[f64], iters_per_epoch: usize) -> Result<DecayTrajectory> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::Config(format!("eta must be positive, got {eta}")));
    }
    if errors.is_empty() {
        return Err(Error::Config("decay simulation needs at least one epoch error".into()));
    }
    let sign_flip = errors.iter().any(|&e| 2.0 * eta * e >= 1.0);
    let mut values = Vec::with_capacity(errors.len() * iters_per_epoch + 1);
    values.push(w0);
    let mut w = w0;
    for &err in errors {
        let factor = 1.0 - 2.0 * eta * err;
        for _ in 0..iters_per_epoch {
            w *= factor;
            values.push(w);
        }
    }
    Ok(DecayTrajectory { eta, errors: errors.to_vec(), iters_per_epoch, values, sign_flip })
}

/// Smallest `t` with `w0 · (1 − 2·η·error)^t ≤ target`, or `None` if the
/// factor never shrinks the value that far.
pub fn iterations_to_reach(w0: f64, eta: f64, error: f64, target: f64) -> Option<u64> {
    let factor = 1.0 - 2.0 * eta * error;
    if w0 <= target {
        return Some(0);
    }
    if !(factor > 0.0 && factor < 1.0 && target > 0.0) {
        return None;
    }
    let t = ((target / w0).ln() / factor.ln()).ceil() as u64;
    // Guard against rounding at the boundary.
    let value = |t: u64| w0 * factor.powf(t as f64);
    let t = if t > 0 && value(t - 1) <= target { t - 1 } else { t };
    Some(if value(t) <= target { t } else { t + 1 })
}
