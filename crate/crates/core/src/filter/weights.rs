use alloc::format;
use alloc::vec::Vec;
use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Covariance;
use crate::{Error, Result};

/// One step of the hypothesis weight dynamics on normalized log-weights,
/// `log wⁱ += h̄ⁱᵀ R⁻¹ Δy − ½ h̄ⁱᵀ R⁻¹ h̄ⁱ dt`, followed by renormalization
/// so that `Σᵢ exp(log wⁱ) = 1`.
///
/// The largest increment is subtracted before it is added, so increments
/// that are equal across hypotheses cancel exactly. Weights far below the
/// smallest double stay representable and positive. Fails with
/// [`Error::Degeneracy`] if no weight survives.
pub fn update_log_weights(
    log_weights: &[f64],
    block_means: &[DVector<f64>],
    dy: &[f64],
    r: &Covariance,
    dt: f64,
) -> Result<Vec<f64>> {
    if block_means.len() != log_weights.len() {
        return Err(Error::dim("block means", log_weights.len(), block_means.len()));
    }
    if dy.len() != r.dim() {
        return Err(Error::dim("observation increment", r.dim(), dy.len()));
    }
    let dy = DVector::from_column_slice(dy);
    let r_inv_dy = r.solve(&dy);
    let mut increments = Vec::with_capacity(log_weights.len());
    for h in block_means {
        if h.len() != r.dim() {
            return Err(Error::dim("block mean", r.dim(), h.len()));
        }
        let inc = h.dot(&r_inv_dy) - 0.5 * r.inv_quadratic(h, h) * dt;
        if !inc.is_finite() {
            return Err(Error::Degeneracy {
                step: None,
                detail: format!("non-finite likelihood increment {inc}"),
            });
        }
        increments.push(inc);
    }
    let top = increments.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_weights.iter().zip(&increments).map(|(lw, inc)| lw + (inc - top)).collect();
    normalize_log_weights(&shifted)
}

/// Shifts log-weights so that their exponentials sum to one.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || log_weights.iter().any(|lw| lw.is_nan()) {
        return Err(Error::Degeneracy {
            step: None,
            detail: "all weights vanished".into(),
        });
    }
    let log_total = max + log_weights.iter().map(|lw| (lw - max).exp()).sum::<f64>().ln();
    Ok(log_weights.iter().map(|lw| lw - log_total).collect())
}

/// Normalized probabilities from log-weights. Entries may underflow to zero.
pub fn probabilities(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for w in &mut out {
        *w /= total;
    }
    out
}

/// [`update_log_weights`] on probabilities.
pub fn update_weights(
    weights: &[f64],
    block_means: &[DVector<f64>],
    dy: &[f64],
    r: &Covariance,
    dt: f64,
) -> Result<Vec<f64>> {
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    Ok(probabilities(&update_log_weights(&log_w, block_means, dy, r, dt)?))
}

/// `1 / Σᵢ (wⁱ)²`. Exactly `L` for bitwise-uniform weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    if let Some(first) = weights.first() {
        if weights.iter().all(|w| w == first) {
            return weights.len() as f64;
        }
    }
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}
