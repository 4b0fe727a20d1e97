use rand::Rng;

use crate::error::{Error, Result};
use crate::moo::non_dominated_filter;

fn check_reference(reference: &[f64]) -> Result<()> {
    if reference.len() < 2 {
        return Err(Error::invalid("hypervolume needs at least two objectives"));
    }
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reference point"));
    }
    Ok(())
}

/// Points strictly inside the reference box; the rest add no volume.
fn bounded_points<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let p = p.as_ref();
        if p.len() != reference.len() {
            return Err(Error::Length {
                left: p.len(),
                right: reference.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hypervolume point"));
        }
        if p.iter().zip(reference).all(|(x, r)| x < r) {
            out.push(p.to_vec());
        }
    }
    Ok(out)
}

/// Exact volume of `⋃_{p ⪯ ρ} ∏ [p_i, ρ_i]`.
///
/// Two objectives use a sorted sweep; more slice along the last objective and
/// recurse on the projected points.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<f64> {
    check_reference(reference)?;
    let pts = bounded_points(points, reference)?;
    Ok(hv_recursive(pts, reference))
}

fn hv_recursive(points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let d = reference.len();
    let keep = non_dominated_filter(&points);
    let mut pts: Vec<Vec<f64>> = keep.into_iter().map(|i| points[i].clone()).collect();
    if d == 2 {
        return hv_2d(pts, reference);
    }
    pts.sort_by(|a, b| {
        a[d - 1]
            .total_cmp(&b[d - 1])
            .then_with(|| a.partial_cmp(b).expect("finite"))
    });
    let sub_ref = &reference[..d - 1];
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let upper = pts.get(i + 1).map_or(reference[d - 1], |p| p[d - 1]);
        let depth = upper - pts[i][d - 1];
        if depth <= 0.0 {
            continue;
        }
        let slice: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..d - 1].to_vec()).collect();
        volume += depth * hv_recursive(slice, sub_ref);
    }
    volume
}

fn hv_2d(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut floor = reference[1];
    for p in &pts {
        if p[1] < floor {
            area += (reference[0] - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    area
}

/// Monte-Carlo estimate of the same volume, with its standard error.
///
/// Samples uniformly from the box spanned by the coordinatewise minimum of
/// the bounded points and the reference point.
pub fn hypervolume_mc<P: AsRef<[f64]>, R: Rng + ?Sized>(
    points: &[P],
    reference: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_reference(reference)?;
    let pts = bounded_points(points, reference)?;
    if pts.is_empty() || n_samples == 0 {
        return Ok((0.0, 0.0));
    }
    let d = reference.len();
    let lower: Vec<f64> = (0..d)
        .map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = lower.iter().zip(reference).map(|(l, r)| r - l).product();
    let mut q = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        for ((qi, l), r) in q.iter_mut().zip(&lower).zip(reference) {
            *qi = l + (r - l) * rng.random::<f64>();
        }
        if pts.iter().any(|p| p.iter().zip(&q).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / n_samples as f64;
    let se = box_volume * (frac * (1.0 - frac) / n_samples as f64).sqrt();
    Ok((box_volume * frac, se))
}
