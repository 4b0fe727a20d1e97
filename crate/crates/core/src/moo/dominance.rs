use crate::error::{Error, Result};

/// `a ≺ b`: no worse in every objective and strictly better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Length {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Indices (ascending) of the points no other point dominates.
///
/// Identical points do not dominate each other, so duplicates are all kept.
pub fn non_dominated_filter<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    // Sorting lexicographically means a point can only be dominated by one
    // that precedes it, and only by a point that is itself non-dominated.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .as_ref()
            .partial_cmp(points[j].as_ref())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let planar = points
        .iter()
        .all(|p| p.as_ref().len() == 2 && p.as_ref().iter().all(|v| v.is_finite()));
    if planar {
        return planar_filter(points, &order);
    }
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        let p = points[i].as_ref();
        if !front.iter().any(|&k| dominates_unchecked(points[k].as_ref(), p)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Two objectives in lexicographic order: a point is dominated exactly when
/// an earlier one has a smaller second coordinate, or the same one with a
/// smaller first coordinate.
fn planar_filter<P: AsRef<[f64]>>(points: &[P], order: &[usize]) -> Vec<usize> {
    let mut best: Option<(f64, f64)> = None;
    let mut front = Vec::new();
    for &i in order {
        let p = points[i].as_ref();
        let dominated = best.is_some_and(|(x, y)| y < p[1] || (y == p[1] && x < p[0]));
        if !dominated {
            front.push(i);
        }
        if best.is_none_or(|(_, y)| p[1] < y) {
            best = Some((p[0], p[1]));
        }
    }
    front.sort_unstable();
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 3.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0, 2.0], &[1.0, 2.5]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn filter_examples() {
        let pts = [vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
        assert_eq!(non_dominated_filter(&pts), vec![0, 1, 2]);
        let pts = [vec![2.0, 2.0], vec![1.0, 1.0]];
        assert_eq!(non_dominated_filter(&pts), vec![1]);
        let pts = [vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 0.5]];
        assert_eq!(non_dominated_filter(&pts), vec![0, 1, 2]);
        assert!(non_dominated_filter::<Vec<f64>>(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn filter_output_is_an_antichain_covering_the_rest(
            pts in proptest::collection::vec(proptest::collection::vec(0u8..6, 3), 0..40)
        ) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
            let front = non_dominated_filter(&pts);
            for &i in &front {
                for &j in &front {
                    prop_assert!(!dominates_unchecked(&pts[i], &pts[j]));
                }
            }
            for i in 0..pts.len() {
                if !front.contains(&i) {
                    prop_assert!(front.iter().any(|&k| dominates_unchecked(&pts[k], &pts[i])));
                }
            }
        }

        #[test]
        fn filter_matches_brute_force(
            dim in 2usize..4,
            raw in proptest::collection::vec((0u8..8, 0u8..8, 0u8..8), 0..80)
        ) {
            let pts: Vec<Vec<f64>> = raw
                .into_iter()
                .map(|(a, b, c)| [a, b, c][..dim].iter().map(|&v| f64::from(v)).collect())
                .collect();
            let brute: Vec<usize> = (0..pts.len())
                .filter(|&i| !pts.iter().any(|q| dominates_unchecked(q, &pts[i])))
                .collect();
            prop_assert_eq!(non_dominated_filter(&pts), brute);
        }
    }
}
