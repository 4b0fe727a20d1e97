use super::lp::{maximize, Constraint, LpOutcome, Relation};
use super::minnorm::min_norm_weights;
use super::types::{dot, GradientSet, PreferenceVector};
use crate::error::{Error, Result};
use crate::metrics::{normalized_weighted_losses, LOSS_FLOOR};

/// Default threshold on the non-uniformity below which EPO only descends.
pub const DEFAULT_EPS_BAL: f64 = 1e-3;

/// Which branch produced the EPO weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpoMode {
    /// Losses already on the ray: min-norm descent.
    Descent,
    /// Losses off the ray: linear program steering back toward it.
    Balance,
    /// The linear program failed; all weight on the most violating objective.
    Fallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpoSolution {
    pub weights: Vec<f64>,
    pub mode: EpoMode,
    /// `μ_r(ℓ)`, the KL divergence of the weighted loss shares from uniform.
    pub non_uniformity: f64,
}

/// The linear program solved off the ray:
/// `max objective·β` over the simplex subject to `constraint·β ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpoProgram {
    /// `G Gᵀ a`, where `a` is the anchor direction in loss space.
    pub objective: Vec<f64>,
    /// Row `j*` of `G Gᵀ`: first-order change of the most violating loss.
    pub constraint: Vec<f64>,
    /// `j* = argmax_j r_j ℓ_j`.
    pub anchor_index: usize,
    pub anchor: Vec<f64>,
    pub non_uniformity: f64,
}

impl EpoProgram {
    pub fn build(grads: &GradientSet, losses: &[f64], r: &PreferenceVector) -> Result<Self> {
        let m = grads.num_objectives();
        if losses.len() != m || r.len() != m {
            return Err(Error::Length {
                left: losses.len().max(r.len()),
                right: m,
            });
        }
        let shares = normalized_weighted_losses(r, losses)?;
        let mf = m as f64;
        let mu: f64 = shares
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| s * (mf * s).ln())
            .sum::<f64>()
            .max(0.0);
        let anchor: Vec<f64> = r
            .iter()
            .zip(&shares)
            .map(|(&rj, &s)| {
                if rj > 0.0 && s > 0.0 {
                    rj * ((mf * s).ln() - mu)
                } else {
                    0.0
                }
            })
            .collect();
        let weighted: Vec<f64> = r.iter().zip(losses).map(|(rj, l)| rj * l.max(LOSS_FLOOR)).collect();
        let anchor_index = argmax(&weighted);
        let gram = grads.gram();
        let objective = gram.iter().map(|row| dot(row, &anchor)).collect();
        Ok(Self {
            objective,
            constraint: gram[anchor_index].clone(),
            anchor_index,
            anchor,
            non_uniformity: mu,
        })
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        dot(&self.objective, beta)
    }

    pub fn is_feasible(&self, beta: &[f64], tol: f64) -> bool {
        let sum: f64 = beta.iter().sum();
        beta.iter().all(|&b| b >= -tol) && (sum - 1.0).abs() <= tol && dot(&self.constraint, beta) >= -tol
    }

    fn solve(&self) -> Option<Vec<f64>> {
        let m = self.objective.len();
        let constraints = [
            Constraint::new(vec![1.0; m], Relation::Eq, 1.0),
            Constraint::new(self.constraint.clone(), Relation::Ge, 0.0),
        ];
        match maximize(&self.objective, &constraints) {
            LpOutcome::Optimal { mut x, .. } => {
                let s: f64 = x.iter().sum();
                if !(s > 0.0) {
                    return None;
                }
                x.iter_mut().for_each(|v| *v /= s);
                Some(x)
            }
            _ => None,
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &x)| if x > best.1 { (i, x) } else { best },
        )
        .0
}

/// Convex gradient weights for one exact-Pareto-optimal (EPO) step.
///
/// With `μ_r(ℓ) ≤ eps_bal` the min-norm descent weights are returned
/// unchanged. Otherwise the weights maximise the first-order decrease of the
/// non-uniformity, `aᵀ G Gᵀ β`, subject to the most violating loss `j*` not
/// increasing to first order; `a_j = r_j (ln(m ℓ̂_j) − μ_r)`.
pub fn epo_weights(grads: &GradientSet, losses: &[f64], r: &PreferenceVector, eps_bal: f64) -> Result<EpoSolution> {
    if grads.rows().iter().flatten().all(|&g| g == 0.0) {
        return Err(Error::ZeroGradients);
    }
    let program = EpoProgram::build(grads, losses, r)?;
    if program.non_uniformity <= eps_bal {
        return Ok(EpoSolution {
            weights: min_norm_weights(grads)?.weights,
            mode: EpoMode::Descent,
            non_uniformity: program.non_uniformity,
        });
    }
    let (weights, mode) = match program.solve() {
        Some(w) => (w, EpoMode::Balance),
        None => {
            let mut w = vec![0.0; losses.len()];
            w[program.anchor_index] = 1.0;
            (w, EpoMode::Fallback)
        }
    };
    Ok(EpoSolution {
        weights,
        mode,
        non_uniformity: program.non_uniformity,
    })
}
