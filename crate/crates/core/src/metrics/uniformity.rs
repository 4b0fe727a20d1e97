use crate::error::{Error, Result};
use crate::moo::PreferenceVector;

/// Losses are clamped below at this value before forming weighted shares.
pub const LOSS_FLOOR: f64 = 1e-12;

/// `ℓ̂_j = r_j ℓ_j / Σ_i r_i ℓ_i`, with `ℓ` clamped at [`LOSS_FLOOR`].
pub fn normalized_weighted_losses(r: &PreferenceVector, losses: &[f64]) -> Result<Vec<f64>> {
    if r.len() != losses.len() {
        return Err(Error::Length {
            left: r.len(),
            right: losses.len(),
        });
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("loss vector"));
    }
    let weighted: Vec<f64> = r.iter().zip(losses).map(|(rj, l)| rj * l.max(LOSS_FLOOR)).collect();
    let total: f64 = weighted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateLosses);
    }
    Ok(weighted.into_iter().map(|w| w / total).collect())
}

/// `μ_r(ℓ) = KL(ℓ̂ ‖ 1/m)` in nats.
pub fn non_uniformity(r: &PreferenceVector, losses: &[f64]) -> Result<f64> {
    let shares = normalized_weighted_losses(r, losses)?;
    let m = shares.len() as f64;
    let kl: f64 = shares.iter().filter(|&&s| s > 0.0).map(|&s| s * (m * s).ln()).sum();
    // KL is non-negative; only rounding can push it below zero
    Ok(kl.max(0.0))
}

/// `1 − μ_r(ℓ)`: equals 1 when `r ⊙ ℓ` is constant and has no lower bound.
pub fn uniformity(r: &PreferenceVector, losses: &[f64]) -> Result<f64> {
    Ok(1.0 - non_uniformity(r, losses)?)
}
