//! Pareto-front learning with preference-conditioned hypernetworks.
//!
//! A hypernetwork maps a preference vector on the simplex to the weights of a
//! target network. Trained with linear scalarisation or EPO steps over
//! randomly sampled preferences, one model covers the whole Pareto front.
//!
//! - [`autodiff`]: dense reverse-mode differentiation.
//! - [`networks`]: target networks, the hypernetwork, checkpoints.
//! - [`moo`]: dominance, min-norm and EPO gradient weights, Dirichlet sampling.
//! - [`metrics`]: hypervolume and uniformity.
//! - [`problems`]: toy problem with an analytic front, synthetic regression, CSV tasks.
//! - [`trainer`]: training loops, Adam, front evaluation, metric logs.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
mod error;
pub mod metrics;
pub mod moo;
pub mod networks;
pub mod problems;
pub mod trainer;

pub use error::{Error, Result};
