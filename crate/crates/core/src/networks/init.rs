use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{ParamLayout, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum InitRule {
    /// Glorot-uniform, multiplied by `scale`.
    Glorot {
        scale: f64,
    },
    Zeros,
}

/// `√(6 / (fan_in + fan_out))`; a rank-1 tensor counts its length as both fans.
pub fn glorot_bound(shape: &[usize]) -> f64 {
    let (fan_in, fan_out) = match shape {
        [a, b] => (*a, *b),
        [d] => (*d, *d),
        other => {
            let n: usize = other.iter().product();
            (n, n)
        }
    };
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}

pub(crate) fn init_layout(layout: ParamLayout, rules: &[InitRule], seed: u64) -> ParamVector {
    debug_assert_eq!(layout.slots().len(), rules.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(layout.len());
    for (slot, rule) in layout.slots().iter().zip(rules) {
        match *rule {
            InitRule::Zeros => data.extend(std::iter::repeat_n(0.0, slot.numel())),
            InitRule::Glorot { scale } => {
                let bound = glorot_bound(&slot.shape);
                data.extend((0..slot.numel()).map(|_| scale * rng.random_range(-bound..=bound)));
            }
        }
    }
    ParamVector::new(layout, data).expect("initialised data matches layout")
}
