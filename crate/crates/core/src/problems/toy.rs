use rand_chacha::ChaCha8Rng;

use super::{Batch, Problem, Split};
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::networks::TargetSpec;

/// Default dimension of the toy decision variable.
pub const TOY_DIM: usize = 100;

/// Two objectives `ℓ_{1,2}(θ) = 1 − exp(−‖θ ∓ 𝟙/√d‖²)`.
///
/// The Pareto set is the segment between the two centres and the front is
/// concave, so linear scalarisation only ever finds its endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyProblem {
    target: TargetSpec,
    dim: usize,
}

impl ToyProblem {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("toy dimension must be positive"));
        }
        Ok(Self {
            target: TargetSpec::Point { dim },
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn centre(&self, sign: f64) -> Vec<f64> {
        vec![sign / (self.dim as f64).sqrt(); self.dim]
    }
}

impl Default for ToyProblem {
    fn default() -> Self {
        Self::new(TOY_DIM).expect("positive dimension")
    }
}

/// Plain evaluation of both toy losses.
pub fn toy_losses(theta: &[f64]) -> [f64; 2] {
    let c = 1.0 / (theta.len() as f64).sqrt();
    let (mut a, mut b) = (0.0, 0.0);
    for &t in theta {
        a += (t - c) * (t - c);
        b += (t + c) * (t + c);
    }
    [1.0 - (-a).exp(), 1.0 - (-b).exp()]
}

/// `n_points` loss vectors along the true front, from `s = −1` to `s = 1`
/// on the Pareto set `θ(s) = s·𝟙/√d`.
pub fn toy_front_oracle(n_points: usize) -> Result<Vec<[f64; 2]>> {
    if n_points < 2 {
        return Err(Error::invalid("front oracle needs at least two points"));
    }
    Ok((0..n_points)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (n_points - 1) as f64;
            [
                1.0 - (-(s - 1.0) * (s - 1.0)).exp(),
                1.0 - (-(s + 1.0) * (s + 1.0)).exp(),
            ]
        })
        .collect())
}

impl Problem for ToyProblem {
    fn name(&self) -> &str {
        "toy"
    }

    fn num_objectives(&self) -> usize {
        2
    }

    fn target_spec(&self) -> &TargetSpec {
        &self.target
    }

    fn sample_batch(&self, _batch_size: usize, _rng: &mut ChaCha8Rng) -> Batch {
        Batch::default()
    }

    fn full_batch(&self, _split: Split) -> Batch {
        Batch::default()
    }

    fn losses(&self, tape: &mut Tape, phi: &[NodeId], _batch: &Batch) -> Result<Vec<NodeId>> {
        let theta = self.target.forward(tape, phi, None)?[0];
        [1.0, -1.0]
            .into_iter()
            .map(|sign| {
                let shift = Tensor::new(vec![self.dim], self.centre(-sign))?;
                let shift = tape.leaf(shift);
                let diff = tape.add(theta, shift)?;
                let sq = tape.l2_norm_sq(diff);
                let neg = tape.neg(sq);
                let e = tape.exp(neg);
                let e = tape.neg(e);
                tape.add_scalar(e, 1.0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_diff_gradient, relative_error};
    use crate::metrics::hypervolume;
    use crate::moo::{dominates, non_dominated_filter};
    use crate::networks::ParamVector;
    use rand::{Rng, SeedableRng};

    fn tape_losses(problem: &ToyProblem, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let phi = ParamVector::new(problem.target_spec().layout(), theta.to_vec()).unwrap();
        let mut tape = Tape::new();
        let nodes = phi.to_leaves(&mut tape);
        let losses = problem.losses(&mut tape, &nodes, &Batch::default()).unwrap();
        let values = losses.iter().map(|&l| tape.value(l).item()).collect();
        let grads = losses
            .iter()
            .map(|&l| tape.backward(l).unwrap().wrt(nodes[0]).into_data())
            .collect();
        (values, grads)
    }

    #[test]
    fn values_at_reference_points() {
        let d = TOY_DIM;
        let c = 1.0 / (d as f64).sqrt();
        let at_centre = toy_losses(&vec![c; d]);
        assert_eq!(at_centre[0], 0.0);
        assert!((at_centre[1] - (1.0 - (-4.0f64).exp())).abs() < 1e-12);
        let at_zero = toy_losses(&vec![0.0; d]);
        let expected = 1.0 - (-1.0f64).exp();
        assert!((at_zero[0] - expected).abs() < 1e-12 && (at_zero[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn tape_matches_plain_evaluation_and_is_symmetric() {
        let problem = ToyProblem::new(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (values, _) = tape_losses(&problem, &theta);
            let plain = toy_losses(&theta);
            assert!((values[0] - plain[0]).abs() < 1e-15 && (values[1] - plain[1]).abs() < 1e-15);
            let flipped: Vec<f64> = theta.iter().map(|t| -t).collect();
            let mirrored = toy_losses(&flipped);
            assert!((plain[0] - mirrored[1]).abs() < 1e-15);
            assert!(values.iter().all(|&l| (0.0..=1.0).contains(&l)));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let problem = ToyProblem::new(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let theta: Vec<f64> = (0..10).map(|_| rng.random_range(-0.5..0.5)).collect();
            let (_, grads) = tape_losses(&problem, &theta);
            for (k, g) in grads.iter().enumerate() {
                let fd = finite_diff_gradient(|t| toy_losses(t)[k], &theta, 1e-6).unwrap();
                assert!(relative_error(g, &fd, 1e-12) < 1e-5);
            }
        }
    }

    #[test]
    fn oracle_endpoints_and_antichain() {
        let front = toy_front_oracle(101).unwrap();
        let far = 1.0 - (-4.0f64).exp();
        assert!((front[0][0] - far).abs() < 1e-15 && front[0][1] == 0.0);
        assert!(front[100][0] == 0.0 && (front[100][1] - far).abs() < 1e-15);
        assert_eq!(non_dominated_filter(&front).len(), front.len());
        assert!(toy_front_oracle(1).is_err());
    }

    /// The staircase misses `O(1/n)` of the area (about `0.39/n` here).
    #[test]
    fn oracle_hypervolume_converges() {
        let rho = [2.0, 2.0];
        let hv = |n| hypervolume(&toy_front_oracle(n).unwrap(), &rho).unwrap();
        let (a, b, c) = (hv(5_000), hv(10_000), hv(40_000));
        assert!(a < b && b < c);
        assert!((a - c).abs() < 1e-4 && (b - c).abs() < 1e-4, "{a} {b} {c}");
    }

    /// Nothing near the Pareto segment beats a point on it.
    #[test]
    fn segment_points_are_not_dominated_by_perturbations() {
        let d = 5;
        let c = 1.0 / (d as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in [-0.6, -0.1, 0.3, 0.8] {
            let on_set = vec![s * c; d];
            let base = toy_losses(&on_set);
            for _ in 0..10_000 {
                let scale = rng.random_range(1e-4..0.5);
                let p: Vec<f64> = on_set.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect();
                assert!(!dominates(&toy_losses(&p), &base).unwrap());
            }
        }
    }
}
