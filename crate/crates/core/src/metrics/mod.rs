//! Front-quality measures.

mod hypervolume;
mod uniformity;

pub use hypervolume::{hypervolume, hypervolume_mc};
pub use uniformity::{non_uniformity, normalized_weighted_losses, uniformity, LOSS_FLOOR};
