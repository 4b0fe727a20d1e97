use super::types::PreferenceVector;
use crate::error::{Error, Result};

/// Evenly spaced evaluation rays.
///
/// For two objectives: `(t, 1 − t)` with `t = i/(count + 1)`, `i = 1..=count`.
/// For more: the smallest simplex lattice with at least `count` points.
pub fn even_rays(m: usize, count: usize) -> Result<Vec<PreferenceVector>> {
    if count == 0 {
        return Err(Error::invalid("need at least one ray"));
    }
    match m {
        0 => Err(Error::invalid("preference dimension must be positive")),
        1 => Ok(vec![PreferenceVector::uniform(1)]),
        2 => (1..=count)
            .map(|i| {
                let t = i as f64 / (count + 1) as f64;
                PreferenceVector::new(vec![t, 1.0 - t])
            })
            .collect(),
        _ => {
            let mut divisions = 1;
            while lattice_size(m, divisions) < count {
                divisions += 1;
            }
            simplex_lattice(m, divisions)
        }
    }
}

fn lattice_size(m: usize, h: usize) -> usize {
    // C(h + m - 1, m - 1)
    let k = m - 1;
    (1..=k).fold(1usize, |acc, i| acc * (h + i) / i)
}

/// All points of the simplex whose coordinates are multiples of `1/divisions`.
pub fn simplex_lattice(m: usize, divisions: usize) -> Result<Vec<PreferenceVector>> {
    if m == 0 || divisions == 0 {
        return Err(Error::invalid("lattice needs m ≥ 1 and divisions ≥ 1"));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    compositions(m, divisions, &mut current, &mut out);
    out.into_iter()
        .map(|c| PreferenceVector::new(c.iter().map(|&k| k as f64 / divisions as f64).collect()))
        .collect()
}

fn compositions(parts: usize, total: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        current.push(total);
        out.push(current.clone());
        current.pop();
        return;
    }
    for k in (0..=total).rev() {
        current.push(k);
        compositions(parts - 1, total - k, current, out);
        current.pop();
    }
}
