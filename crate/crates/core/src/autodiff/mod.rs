//! Minimal dense reverse-mode differentiation.
//!
//! A [`Tape`] is rebuilt for every forward pass. Values are computed eagerly as
//! ops are recorded; [`Tape::backward`] then walks the nodes in reverse and
//! accumulates adjoints. Everything is `f64`.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_gradient, relative_error};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
