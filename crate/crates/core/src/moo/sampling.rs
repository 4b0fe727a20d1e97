use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::types::PreferenceVector;
use crate::error::{Error, Result};

/// Concentration used for training preferences unless configured otherwise.
pub const DEFAULT_ALPHA: f64 = 0.2;

/// Draws from the symmetric Dirichlet(α) on the `m`-simplex by normalising
/// `m` independent Gamma(α, 1) variates.
pub fn sample_preference<R: Rng + ?Sized>(m: usize, alpha: f64, rng: &mut R) -> Result<PreferenceVector> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "Dirichlet concentration must be positive, got {alpha}"
        )));
    }
    if m == 0 {
        return Err(Error::invalid("preference dimension must be positive"));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    loop {
        let draws: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        // with tiny α every draw can underflow; redraw rather than divide by zero
        if sum > 0.0 && sum.is_finite() {
            return PreferenceVector::new(draws.into_iter().map(|x| x / sum).collect());
        }
    }
}
