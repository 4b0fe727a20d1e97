use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, NodeId, Tape, Tensor};
use crate::error::{Error, Result};

/// Position of one weight or bias tensor inside a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSlot {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSlot {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Ordered, contiguous slots covering a flat parameter vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    slots: Vec<TensorSlot>,
}

impl ParamLayout {
    pub fn from_shapes<I, S>(shapes: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<usize>)>,
        S: Into<String>,
    {
        let mut offset = 0;
        let slots = shapes
            .into_iter()
            .map(|(name, shape)| {
                let slot = TensorSlot {
                    name: name.into(),
                    shape,
                    offset,
                };
                offset += slot.numel();
                slot
            })
            .collect();
        Self { slots }
    }

    pub fn slots(&self) -> &[TensorSlot] {
        &self.slots
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.slots.last().map_or(0, |s| s.offset + s.numel())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the offsets are contiguous and start at zero.
    pub fn validate(&self) -> Result<()> {
        let mut expected = 0;
        for s in &self.slots {
            if s.offset != expected {
                return Err(Error::Layout {
                    expected: format!("slot {} at offset {expected}", s.name),
                    actual: format!("offset {}", s.offset),
                });
            }
            expected += s.numel();
        }
        Ok(())
    }

    pub(crate) fn describe(&self) -> String {
        let parts: Vec<String> = self.slots.iter().map(|s| format!("{}{:?}", s.name, s.shape)).collect();
        parts.join(", ")
    }

    /// Fails unless the nodes hold tensors with exactly this layout's shapes.
    pub fn check_nodes(&self, tape: &Tape, nodes: &[NodeId]) -> Result<()> {
        let actual: Vec<&[usize]> = nodes.iter().map(|&n| tape.value(n).shape()).collect();
        let matches =
            actual.len() == self.slots.len() && actual.iter().zip(&self.slots).all(|(a, s)| *a == s.shape.as_slice());
        if matches {
            Ok(())
        } else {
            Err(Error::Layout {
                expected: self.describe(),
                actual: format!("{actual:?}"),
            })
        }
    }
}

/// Flat `f64` parameters with their tensor layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    layout: ParamLayout,
    data: Vec<f64>,
}

impl ParamVector {
    pub fn new(layout: ParamLayout, data: Vec<f64>) -> Result<Self> {
        layout.validate()?;
        if layout.len() != data.len() {
            return Err(Error::Layout {
                expected: format!("{} parameters ({})", layout.len(), layout.describe()),
                actual: format!("{} parameters", data.len()),
            });
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(layout: ParamLayout) -> Self {
        let data = vec![0.0; layout.len()];
        Self { layout, data }
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, slot: usize) -> Tensor {
        let s = &self.layout.slots[slot];
        Tensor::new(s.shape.clone(), self.data[s.offset..s.offset + s.numel()].to_vec())
            .expect("slot shape matches its extent")
    }

    /// Records every tensor as a leaf, in layout order.
    pub fn to_leaves(&self, tape: &mut Tape) -> Vec<NodeId> {
        (0..self.layout.slots.len())
            .map(|i| tape.leaf(self.tensor(i)))
            .collect()
    }

    /// Collects node values laid out as `layout`.
    pub fn from_nodes(layout: &ParamLayout, tape: &Tape, nodes: &[NodeId]) -> Result<Self> {
        layout.check_nodes(tape, nodes)?;
        let data = nodes
            .iter()
            .flat_map(|&n| tape.value(n).data().iter().copied())
            .collect();
        Ok(Self {
            layout: layout.clone(),
            data,
        })
    }
}

/// Flattens the adjoints of `nodes` in order.
pub fn flatten_grads(grads: &Gradients, nodes: &[NodeId]) -> Vec<f64> {
    nodes.iter().flat_map(|&n| grads.wrt(n).into_data()).collect()
}
