//! Target networks, the preference-conditioned hypernetwork, and parameter storage.

mod checkpoint;
mod hyper;
mod init;
mod params;
mod target;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader, CHECKPOINT_MAGIC,
    FORMAT_VERSION,
};
pub use hyper::{HyperNetSpec, DEFAULT_HEAD_SCALE};
pub use init::glorot_bound;
pub use params::{flatten_grads, ParamLayout, ParamVector, TensorSlot};
pub use target::{EmbeddingSpec, MlpSpec, TargetInput, TargetSpec};
