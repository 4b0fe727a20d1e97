//! Dominance, scalarisation and gradient-combination solvers.

mod dominance;
mod epo;
pub mod lp;
mod minnorm;
mod rays;
mod sampling;
mod types;

pub use dominance::{dominates, non_dominated_filter};
pub use epo::{epo_weights, EpoMode, EpoProgram, EpoSolution, DEFAULT_EPS_BAL};
pub use minnorm::{
    duality_gap, frank_wolfe_min_norm, min_norm_weights, wolfe_min_norm, MinNorm, FW_GAP_TOL, FW_MAX_ITER,
};
pub use rays::{even_rays, simplex_lattice};
pub use sampling::{sample_preference, DEFAULT_ALPHA};
pub use types::{GradientSet, LossVector, PreferenceVector, SIMPLEX_TOL};

use crate::error::{Error, Result};

/// `Σ r_i ℓ_i`.
pub fn linear_scalarization(r: &PreferenceVector, losses: &[f64]) -> Result<f64> {
    if r.len() != losses.len() {
        return Err(Error::Length {
            left: r.len(),
            right: losses.len(),
        });
    }
    Ok(r.iter().zip(losses).map(|(a, b)| a * b).sum())
}
