use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ r_j = 1`.
pub const SIMPLEX_TOL: f64 = 1e-8;

/// A point on the probability simplex: a trade-off between `m` objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::OffSimplex("empty preference vector".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::OffSimplex(format!("entry {v} in {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OffSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// `(1/m, …, 1/m)`.
    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Unit vector `e_k`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PreferenceVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

/// Non-negative, finite values of the `m` objectives for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss vector"));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(Error::invalid(format!("negative loss {v}")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LossVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LossVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LossVector> for Vec<f64> {
    fn from(l: LossVector) -> Self {
        l.0
    }
}

/// Per-objective gradients with respect to one shared parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    rows: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("gradient set needs at least one objective"))?;
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Length {
                left: bad.len(),
                right: n,
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient set"));
        }
        Ok(Self { rows })
    }

    pub fn num_objectives(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Gram matrix `G Gᵀ`.
    #[allow(clippy::needless_range_loop)]
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let m = self.rows.len();
        let mut out = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let d = dot(&self.rows[i], &self.rows[j]);
                out[i][j] = d;
                out[j][i] = d;
            }
        }
        out
    }

    /// `Gᵀ β`, the combined direction.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for (row, &w) in self.rows.iter().zip(weights) {
            for (x, g) in v.iter_mut().zip(row) {
                *x += w * g;
            }
        }
        v
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
