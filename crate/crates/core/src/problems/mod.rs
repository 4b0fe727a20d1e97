//! Benchmark problems: the two-Gaussian toy problem with an analytic front,
//! synthetic multi-output regression and CSV tabular tasks.

mod tabular;
mod toy;

pub use tabular::{
    load_csv_problem, synth_regression, Dataset, SplitIndices, SynthSpec, TabularOptions, TabularProblem, TargetColumn,
};
pub use toy::{toy_front_oracle, toy_losses, ToyProblem, TOY_DIM};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Tape};
use crate::error::Result;
use crate::networks::TargetSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Row indices of one mini-batch. Problems without data ignore it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Batch {
    pub rows: Vec<usize>,
}

/// Per-column loss of a tabular objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Mean squared error.
    Mse,
    /// Binary cross-entropy on a logit; targets must lie in `[0, 1]`.
    Bce,
}

/// A problem with `m ≥ 2` non-negative losses of a target network's weights.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn num_objectives(&self) -> usize;

    fn target_spec(&self) -> &TargetSpec;

    /// A training mini-batch drawn from `rng`.
    fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Batch;

    /// Every row of `split`.
    fn full_batch(&self, split: Split) -> Batch;

    /// Records the `m` scalar losses of target weights `phi` on `batch`.
    fn losses(&self, tape: &mut Tape, phi: &[NodeId], batch: &Batch) -> Result<Vec<NodeId>>;
}
