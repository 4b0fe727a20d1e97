use serde::{Deserialize, Serialize};

use super::init::{init_layout, InitRule};
use super::params::{ParamLayout, ParamVector};
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};

/// Learnable lookup table for one categorical input column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub cardinality: usize,
    pub dim: usize,
}

/// Feed-forward relu network with linear output heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    /// Number of numeric input features.
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub head_dims: Vec<usize>,
    #[serde(default)]
    pub embeddings: Vec<EmbeddingSpec>,
}

/// Architecture of the network whose weights are supplied from outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    /// The parameters are the decision variable itself; the "network" returns them.
    Point {
        dim: usize,
    },
    Mlp(MlpSpec),
}

/// Batch fed to an [`MlpSpec`] network.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetInput {
    /// `[batch, input_dim]`.
    pub numeric: Tensor,
    /// One index column per embedding, each of length `batch`.
    pub categorical: Vec<Vec<usize>>,
}

impl MlpSpec {
    fn first_width(&self) -> usize {
        self.input_dim + self.embeddings.iter().map(|e| e.dim).sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        if self.head_dims.is_empty() {
            return Err(Error::invalid("target network needs at least one head"));
        }
        if self.first_width() == 0 {
            return Err(Error::invalid("target network has no inputs"));
        }
        let zero_width = self.hidden.iter().chain(&self.head_dims).any(|&w| w == 0)
            || self.embeddings.iter().any(|e| e.cardinality == 0 || e.dim == 0);
        if zero_width {
            return Err(Error::invalid("layer widths must be positive"));
        }
        Ok(())
    }

    fn forward(&self, tape: &mut Tape, phi: &[NodeId], input: &TargetInput) -> Result<Vec<NodeId>> {
        let batch = input.numeric.shape().first().copied().unwrap_or(0);
        if input.numeric.shape() != [batch, self.input_dim] {
            return Err(Error::shape(
                "target_forward",
                format!(
                    "input {:?}, expected [batch, {}]",
                    input.numeric.shape(),
                    self.input_dim
                ),
            ));
        }
        if input.categorical.len() != self.embeddings.len() || input.categorical.iter().any(|c| c.len() != batch) {
            return Err(Error::shape(
                "target_forward",
                format!(
                    "{} categorical columns for {} embeddings over batch {batch}",
                    input.categorical.len(),
                    self.embeddings.len()
                ),
            ));
        }
        let mut slot = phi.iter().copied();
        let mut next = || slot.next().expect("layout checked");

        let mut parts = Vec::new();
        if self.input_dim > 0 {
            parts.push(tape.leaf(input.numeric.clone()));
        }
        for column in &input.categorical {
            let table = next();
            parts.push(tape.gather_rows(table, column)?);
        }
        let mut h = if parts.len() == 1 {
            parts[0]
        } else {
            tape.concat_cols(&parts)?
        };
        for _ in &self.hidden {
            let (w, b) = (next(), next());
            let z = tape.matmul(h, w)?;
            let z = tape.add(z, b)?;
            h = tape.relu(z);
        }
        let mut heads = Vec::with_capacity(self.head_dims.len());
        for _ in &self.head_dims {
            let (w, b) = (next(), next());
            let z = tape.matmul(h, w)?;
            heads.push(tape.add(z, b)?);
        }
        Ok(heads)
    }
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::Point { dim: 0 } => Err(Error::invalid("point dimension must be positive")),
            TargetSpec::Point { .. } => Ok(()),
            TargetSpec::Mlp(m) => m.validate(),
        }
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout_with_rules().0
    }

    pub fn num_params(&self) -> usize {
        self.layout().len()
    }

    fn layout_with_rules(&self) -> (ParamLayout, Vec<InitRule>) {
        let glorot = InitRule::Glorot { scale: 1.0 };
        match self {
            TargetSpec::Point { dim } => (ParamLayout::from_shapes([("point", vec![*dim])]), vec![glorot]),
            TargetSpec::Mlp(m) => {
                let mut shapes = Vec::new();
                let mut rules = Vec::new();
                for (k, e) in m.embeddings.iter().enumerate() {
                    shapes.push((format!("embedding.{k}"), vec![e.cardinality, e.dim]));
                    rules.push(glorot);
                }
                let mut width = m.first_width();
                for (i, &h) in m.hidden.iter().enumerate() {
                    shapes.push((format!("layer.{i}.weight"), vec![width, h]));
                    shapes.push((format!("layer.{i}.bias"), vec![h]));
                    rules.extend([glorot, InitRule::Zeros]);
                    width = h;
                }
                for (i, &d) in m.head_dims.iter().enumerate() {
                    shapes.push((format!("head.{i}.weight"), vec![width, d]));
                    shapes.push((format!("head.{i}.bias"), vec![d]));
                    rules.extend([glorot, InitRule::Zeros]);
                }
                (ParamLayout::from_shapes(shapes), rules)
            }
        }
    }

    /// Glorot-uniform weights, zero biases; deterministic in `seed`.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let (layout, rules) = self.layout_with_rules();
        init_layout(layout, &rules, seed)
    }

    /// Applies the network with weights `phi` (one node per layout slot).
    ///
    /// Returns one prediction node per head; a `Point` target returns its
    /// parameter node unchanged and ignores `input`.
    pub fn forward(&self, tape: &mut Tape, phi: &[NodeId], input: Option<&TargetInput>) -> Result<Vec<NodeId>> {
        self.layout().check_nodes(tape, phi)?;
        match self {
            TargetSpec::Point { .. } => Ok(vec![phi[0]]),
            TargetSpec::Mlp(m) => {
                let input = input.ok_or_else(|| Error::invalid("mlp target needs an input batch"))?;
                m.forward(tape, phi, input)
            }
        }
    }
}
