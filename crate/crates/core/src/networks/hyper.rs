use serde::{Deserialize, Serialize};

use super::init::{init_layout, InitRule};
use super::params::{ParamLayout, ParamVector};
use super::target::TargetSpec;
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::moo::PreferenceVector;

/// Multiplier applied to the Glorot bound of every head weight, so freshly
/// initialised hypernetworks emit small target weights.
pub const DEFAULT_HEAD_SCALE: f64 = 0.1;

fn default_head_scale() -> f64 {
    DEFAULT_HEAD_SCALE
}

/// Hypernetwork `h(r; θ)`: a relu MLP trunk over the raw preference vector,
/// followed by one linear head per target-network tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperNetSpec {
    /// Number of objectives `m`.
    pub pref_dim: usize,
    pub trunk_hidden: Vec<usize>,
    pub target: TargetSpec,
    #[serde(default = "default_head_scale")]
    pub head_scale: f64,
}

impl HyperNetSpec {
    /// Two hidden layers of `width`, the default trunk.
    pub fn new(pref_dim: usize, width: usize, target: TargetSpec) -> Self {
        Self {
            pref_dim,
            trunk_hidden: vec![width, width],
            target,
            head_scale: DEFAULT_HEAD_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pref_dim < 1 {
            return Err(Error::invalid("preference dimension must be positive"));
        }
        if self.trunk_hidden.contains(&0) {
            return Err(Error::invalid("trunk widths must be positive"));
        }
        if !(self.head_scale > 0.0 && self.head_scale.is_finite()) {
            return Err(Error::invalid("head scale must be positive"));
        }
        self.target.validate()
    }

    pub fn target_layout(&self) -> ParamLayout {
        self.target.layout()
    }

    fn layout_with_rules(&self) -> (ParamLayout, Vec<InitRule>) {
        let mut shapes = Vec::new();
        let mut rules = Vec::new();
        let mut width = self.pref_dim;
        for (i, &h) in self.trunk_hidden.iter().enumerate() {
            shapes.push((format!("trunk.{i}.weight"), vec![width, h]));
            shapes.push((format!("trunk.{i}.bias"), vec![h]));
            rules.extend([InitRule::Glorot { scale: 1.0 }, InitRule::Zeros]);
            width = h;
        }
        for slot in self.target_layout().slots() {
            let n = slot.numel();
            shapes.push((format!("head.{}.weight", slot.name), vec![width, n]));
            shapes.push((format!("head.{}.bias", slot.name), vec![n]));
            rules.extend([InitRule::Glorot { scale: self.head_scale }, InitRule::Zeros]);
        }
        (ParamLayout::from_shapes(shapes), rules)
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout_with_rules().0
    }

    pub fn init_params(&self, seed: u64) -> ParamVector {
        let (layout, rules) = self.layout_with_rules();
        init_layout(layout, &rules, seed)
    }

    /// Emits target weights for preference `r`, one node per target slot.
    ///
    /// `theta` holds the hypernetwork parameters as tape nodes (see
    /// [`ParamVector::to_leaves`]), so the result is differentiable in them.
    pub fn forward(&self, tape: &mut Tape, theta: &[NodeId], r: &PreferenceVector) -> Result<Vec<NodeId>> {
        if r.len() != self.pref_dim {
            return Err(Error::Length {
                left: r.len(),
                right: self.pref_dim,
            });
        }
        self.layout().check_nodes(tape, theta)?;
        let mut params = theta.iter().copied();
        let mut next = || params.next().expect("layout checked");

        let mut h = tape.leaf(Tensor::row(r.as_slice()));
        for _ in &self.trunk_hidden {
            let (w, b) = (next(), next());
            let z = tape.matmul(h, w)?;
            let z = tape.add(z, b)?;
            h = tape.relu(z);
        }
        let target_layout = self.target_layout();
        let mut out = Vec::with_capacity(target_layout.slots().len());
        for slot in target_layout.slots() {
            let (w, b) = (next(), next());
            let z = tape.matmul(h, w)?;
            let z = tape.add(z, b)?;
            out.push(tape.reshape(z, &slot.shape)?);
        }
        Ok(out)
    }

    /// Convenience: target weights `φ(θ, r)` as a plain parameter vector.
    pub fn generate(&self, theta: &ParamVector, r: &PreferenceVector) -> Result<ParamVector> {
        let mut tape = Tape::new();
        let nodes = theta.to_leaves(&mut tape);
        let phi = self.forward(&mut tape, &nodes, r)?;
        ParamVector::from_nodes(&self.target_layout(), &tape, &phi)
    }
}
