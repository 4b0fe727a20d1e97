//! Training loops for the hypernetwork and the per-ray baselines, the Adam
//! optimizer and front evaluation.

mod adam;
mod report;

pub use adam::{adam_step, AdamState, ADAM_EPS, BETA1, BETA2};
pub use report::{evaluate_front, evaluate_losses, ray_uniformity, FrontReport, FrontRow, MetricLog};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::moo::{
    epo_weights, min_norm_weights, sample_preference, GradientSet, PreferenceVector, DEFAULT_ALPHA, DEFAULT_EPS_BAL,
};
use crate::networks::{flatten_grads, HyperNetSpec, ParamVector};
use crate::problems::{Problem, Split};

/// Losses above this abort training as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Hypernetwork, gradient weights `r`.
    PhnLs,
    /// Hypernetwork, EPO gradient weights.
    PhnEpo,
    /// One target network per ray, gradient weights `r`.
    BaselineLs,
    /// One target network, min-norm gradient weights.
    BaselineMgda,
}

impl Variant {
    pub fn is_hypernetwork(self) -> bool {
        matches!(self, Variant::PhnLs | Variant::PhnEpo)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::PhnLs => "phn-ls",
            Variant::PhnEpo => "phn-epo",
            Variant::BaselineLs => "baseline-ls",
            Variant::BaselineMgda => "baseline-mgda",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    /// Dirichlet concentration of the training preferences.
    pub alpha: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub eps_bal: f64,
    pub eval_rays: Vec<PreferenceVector>,
    /// Steps between front reports; 0 reports only the first and last step.
    pub eval_interval: usize,
    pub reference_point: Vec<f64>,
    pub eval_split: Split,
}

impl TrainConfig {
    pub fn new(variant: Variant, lr: f64, steps: usize, reference_point: Vec<f64>) -> Self {
        Self {
            variant,
            alpha: DEFAULT_ALPHA,
            lr,
            batch_size: 1,
            steps,
            seed: 0,
            eps_bal: DEFAULT_EPS_BAL,
            eval_rays: Vec::new(),
            eval_interval: 0,
            reference_point,
            eval_split: Split::Validation,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.eps_bal >= 0.0) {
            return Err(Error::invalid("eps_bal must be non-negative"));
        }
        if self.reference_point.len() != m {
            return Err(Error::Length {
                left: self.reference_point.len(),
                right: m,
            });
        }
        if let Some(r) = self.eval_rays.iter().find(|r| r.len() != m) {
            return Err(Error::Length {
                left: r.len(),
                right: m,
            });
        }
        Ok(())
    }

    fn reports_at(&self, step: usize) -> bool {
        step == 0 || step == self.steps || (self.eval_interval > 0 && step.is_multiple_of(self.eval_interval))
    }
}

/// Trained hypernetwork parameters and the front reports taken on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct PhnOutcome {
    pub theta: ParamVector,
    pub history: Vec<FrontReport>,
}

/// `Σ_j w_j ℓ_j` on the tape.
fn weighted_sum(tape: &mut Tape, losses: &[NodeId], weights: &[f64]) -> Result<NodeId> {
    let mut total = tape.scale(losses[0], weights[0]);
    for (&l, &w) in losses.iter().zip(weights).skip(1) {
        let term = tape.scale(l, w);
        total = tape.add(total, term)?;
    }
    Ok(total)
}

fn check_losses(step: usize, values: &[f64], last_good: &ParamVector) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v > DIVERGENCE_LIMIT) {
        return Err(Error::Diverged {
            step,
            reason: format!("loss {v}"),
            last_good: Box::new(last_good.clone()),
        });
    }
    Ok(())
}

/// Per-objective gradients with respect to `nodes`.
fn objective_gradients(tape: &Tape, losses: &[NodeId], nodes: &[NodeId]) -> Result<GradientSet> {
    let rows = losses
        .iter()
        .map(|&l| Ok(flatten_grads(&tape.backward(l)?, nodes)))
        .collect::<Result<Vec<_>>>()?;
    GradientSet::new(rows)
}

fn update(adam: &mut AdamState, params: &mut ParamVector, grads: &[f64], lr: f64, step: usize) -> Result<()> {
    let before = params.clone();
    adam.step(params.data_mut(), grads, lr).map_err(|e| match e {
        Error::NonFinite(what) => Error::Diverged {
            step,
            reason: format!("non-finite {what}"),
            last_good: Box::new(before),
        },
        other => other,
    })
}

/// Trains a hypernetwork with one sampled preference per step.
pub fn phn_train(problem: &dyn Problem, spec: &HyperNetSpec, config: &TrainConfig) -> Result<PhnOutcome> {
    phn_train_with(problem, spec, config, &mut |_| Ok(()))
}

/// [`phn_train`], handing each front report to `on_report` as it is taken.
pub fn phn_train_with(
    problem: &dyn Problem,
    spec: &HyperNetSpec,
    config: &TrainConfig,
    on_report: &mut dyn FnMut(&FrontReport) -> Result<()>,
) -> Result<PhnOutcome> {
    let m = problem.num_objectives();
    config.validate(m)?;
    if !config.variant.is_hypernetwork() {
        return Err(Error::invalid(format!(
            "{} is not a hypernetwork variant",
            config.variant.name()
        )));
    }
    spec.validate()?;
    if spec.pref_dim != m || &spec.target != problem.target_spec() {
        return Err(Error::invalid(format!(
            "hypernetwork spec does not match problem '{}'",
            problem.name()
        )));
    }

    let start = Instant::now();
    let mut theta = spec.init_params(config.seed);
    let mut adam = AdamState::new(theta.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut history = Vec::new();
    let mut report = |theta: &ParamVector, step: usize, history: &mut Vec<FrontReport>| -> Result<()> {
        if config.eval_rays.is_empty() {
            return Ok(());
        }
        let mut r = evaluate_front(
            theta,
            spec,
            problem,
            &config.eval_rays,
            &config.reference_point,
            config.eval_split,
        )?;
        r.step = step;
        r.wall_clock_s = start.elapsed().as_secs_f64();
        on_report(&r)?;
        history.push(r);
        Ok(())
    };

    for step in 0..config.steps {
        if config.reports_at(step) {
            report(&theta, step, &mut history)?;
        }
        let r = sample_preference(m, config.alpha, &mut rng)?;
        let mut tape = Tape::new();
        let theta_nodes = theta.to_leaves(&mut tape);
        let phi = spec.forward(&mut tape, &theta_nodes, &r)?;
        let batch = problem.sample_batch(config.batch_size, &mut rng);
        let losses = problem.losses(&mut tape, &phi, &batch)?;
        let values: Vec<f64> = losses.iter().map(|&l| tape.value(l).item()).collect();
        check_losses(step, &values, &theta)?;

        let weights = match config.variant {
            Variant::PhnEpo => {
                let grads = objective_gradients(&tape, &losses, &phi)?;
                match epo_weights(&grads, &values, &r, config.eps_bal) {
                    Ok(sol) => sol.weights,
                    // φ is stationary for every loss, so θ gets no gradient either way
                    Err(Error::ZeroGradients) => r.to_vec(),
                    Err(e) => return Err(e),
                }
            }
            _ => r.to_vec(),
        };
        let total = weighted_sum(&mut tape, &losses, &weights)?;
        let grads = flatten_grads(&tape.backward(total)?, &theta_nodes);
        update(&mut adam, &mut theta, &grads, config.lr, step)?;
    }
    if config.reports_at(config.steps) {
        report(&theta, config.steps, &mut history)?;
    }
    Ok(PhnOutcome { theta, history })
}

/// Trains a single target network directly.
///
/// `baseline-ls` descends `Σ r_j ℓ_j` for the given ray; `baseline-mgda`
/// follows the min-norm direction and ignores the ray.
pub fn baseline_train(
    problem: &dyn Problem,
    ray: Option<&PreferenceVector>,
    config: &TrainConfig,
) -> Result<ParamVector> {
    let m = problem.num_objectives();
    config.validate(m)?;
    let ray = match (config.variant, ray) {
        (Variant::BaselineLs, Some(r)) if r.len() == m => Some(r),
        (Variant::BaselineLs, Some(r)) => {
            return Err(Error::Length {
                left: r.len(),
                right: m,
            })
        }
        (Variant::BaselineLs, None) => return Err(Error::invalid("baseline-ls needs a preference ray")),
        (Variant::BaselineMgda, _) => None,
        (v, _) => return Err(Error::invalid(format!("{} is not a baseline variant", v.name()))),
    };

    let target = problem.target_spec();
    let mut phi = target.init_params(config.seed);
    let mut adam = AdamState::new(phi.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    for step in 0..config.steps {
        let mut tape = Tape::new();
        let nodes = phi.to_leaves(&mut tape);
        let batch = problem.sample_batch(config.batch_size, &mut rng);
        let losses = problem.losses(&mut tape, &nodes, &batch)?;
        let values: Vec<f64> = losses.iter().map(|&l| tape.value(l).item()).collect();
        check_losses(step, &values, &phi)?;
        let grads = match ray {
            Some(r) => {
                let total = weighted_sum(&mut tape, &losses, r)?;
                flatten_grads(&tape.backward(total)?, &nodes)
            }
            None => {
                let set = objective_gradients(&tape, &losses, &nodes)?;
                min_norm_weights(&set)?.direction
            }
        };
        update(&mut adam, &mut phi, &grads, config.lr, step)?;
    }
    Ok(phi)
}
