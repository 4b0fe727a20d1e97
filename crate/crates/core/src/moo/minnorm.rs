use super::types::GradientSet;
use crate::error::Result;

pub const FW_MAX_ITER: usize = 500;
pub const FW_GAP_TOL: f64 = 1e-9;

/// Minimum-norm point of the convex hull of a gradient set.
#[derive(Clone, Debug, PartialEq)]
pub struct MinNorm {
    /// Convex weights β.
    pub weights: Vec<f64>,
    /// `v = Gᵀβ`.
    pub direction: Vec<f64>,
}

impl MinNorm {
    pub fn norm(&self) -> f64 {
        self.direction.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Convex weights minimising `‖Gᵀβ‖₂` over the simplex.
///
/// Two objectives use the closed form; more use away-step Frank–Wolfe on the
/// Gram matrix ([`FW_MAX_ITER`] iterations, duality gap below [`FW_GAP_TOL`]).
/// Badly conditioned instances that leave a gap after the iteration budget are
/// finished with Wolfe's min-norm-point algorithm.
pub fn min_norm_weights(grads: &GradientSet) -> Result<MinNorm> {
    let gram = grads.gram();
    let weights = match gram.len() {
        1 => vec![1.0],
        2 => min_norm_pair(&gram),
        _ => {
            let fw = frank_wolfe_min_norm(&gram, FW_MAX_ITER, FW_GAP_TOL);
            if duality_gap(&gram, &fw) <= FW_GAP_TOL {
                fw
            } else {
                let exact = wolfe_min_norm(&gram, FW_GAP_TOL);
                if quad_form(&gram, &exact) <= quad_form(&gram, &fw) {
                    exact
                } else {
                    fw
                }
            }
        }
    };
    let direction = grads.combine(&weights);
    Ok(MinNorm { weights, direction })
}

/// Closed form for two gradients: `γ = clip(g₂·(g₂ − g₁) / ‖g₁ − g₂‖², 0, 1)`.
fn min_norm_pair(gram: &[Vec<f64>]) -> Vec<f64> {
    let (g11, g12, g22) = (gram[0][0], gram[0][1], gram[1][1]);
    let denom = g11 + g22 - 2.0 * g12;
    if denom <= f64::EPSILON * (g11 + g22) || denom <= 0.0 {
        // identical gradients: every convex combination is the same point
        return vec![0.5, 0.5];
    }
    let gamma = ((g22 - g12) / denom).clamp(0.0, 1.0);
    vec![gamma, 1.0 - gamma]
}

/// Away-step Frank–Wolfe for `min βᵀ M β` over the simplex, where `M` is a
/// Gram matrix. Stops once the duality gap `βᵀMβ − minᵢ (Mβ)ᵢ` is below `tol`.
pub fn frank_wolfe_min_norm(gram: &[Vec<f64>], max_iter: usize, tol: f64) -> Vec<f64> {
    let m = gram.len();
    let mut beta = vec![1.0 / m as f64; m];
    let mat_vec = |b: &[f64]| mat_vec(gram, b);
    for _ in 0..max_iter {
        let mb = mat_vec(&beta);
        let quad: f64 = beta.iter().zip(&mb).map(|(b, w)| b * w).sum();
        let (fw, &fw_val) = mb
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let fw_gap = quad - fw_val;
        if fw_gap <= tol {
            break;
        }
        let (away, away_val) = mb
            .iter()
            .enumerate()
            .filter(|(i, _)| beta[*i] > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
            .expect("β has support");
        let away_gap = away_val - quad;

        // direction d and maximal step
        let mut d = vec![0.0; m];
        let max_step;
        let is_away = fw_gap < away_gap && beta[away] < 1.0;
        if !is_away {
            for (di, bi) in d.iter_mut().zip(&beta) {
                *di = -bi;
            }
            d[fw] += 1.0;
            max_step = 1.0;
        } else {
            d.copy_from_slice(&beta);
            d[away] -= 1.0;
            max_step = beta[away] / (1.0 - beta[away]);
        }
        // exact line search on βᵀMβ along d
        let md = mat_vec(&d);
        let curvature: f64 = d.iter().zip(&md).map(|(a, b)| a * b).sum();
        let slope: f64 = d.iter().zip(&mb).map(|(a, b)| a * b).sum();
        let step = if curvature > 0.0 {
            (-slope / curvature).clamp(0.0, max_step)
        } else {
            max_step
        };
        if step <= 0.0 {
            break;
        }
        for (b, di) in beta.iter_mut().zip(&d) {
            *b = (*b + step * di).max(0.0);
        }
        if is_away && step == max_step {
            beta[away] = 0.0;
        }
        let s: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= s);
    }
    beta
}

fn mat_vec(gram: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    gram.iter()
        .map(|row| row.iter().zip(b).map(|(x, y)| x * y).sum())
        .collect()
}

fn quad_form(gram: &[Vec<f64>], b: &[f64]) -> f64 {
    mat_vec(gram, b).iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖v‖² − minᵢ gᵢ·v` for `v = Gᵀβ`; zero exactly at the min-norm point.
pub fn duality_gap(gram: &[Vec<f64>], beta: &[f64]) -> f64 {
    let mb = mat_vec(gram, beta);
    let quad: f64 = mb.iter().zip(beta).map(|(x, y)| x * y).sum();
    quad - mb.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Wolfe's min-norm-point algorithm in Gram-matrix form.
///
/// Keeps a corral of affinely independent vertices, jumping to the affine
/// minimiser of the corral whenever it lies inside the hull of the corral.
pub fn wolfe_min_norm(gram: &[Vec<f64>], tol: f64) -> Vec<f64> {
    let m = gram.len();
    let start = (0..m)
        .min_by(|&a, &b| gram[a][a].total_cmp(&gram[b][b]))
        .expect("non-empty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let to_beta = |corral: &[usize], lambda: &[f64]| {
        let mut b = vec![0.0; m];
        for (&i, &l) in corral.iter().zip(lambda) {
            b[i] = l;
        }
        b
    };
    for _ in 0..(50 * m).max(100) {
        let beta = to_beta(&corral, &lambda);
        let mb = mat_vec(gram, &beta);
        let quad: f64 = mb.iter().zip(&beta).map(|(x, y)| x * y).sum();
        let (j, &best) = mb
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if quad - best <= tol || corral.contains(&j) {
            return beta;
        }
        corral.push(j);
        lambda.push(0.0);
        loop {
            let Some(alpha) = affine_minimizer(gram, &corral) else {
                return to_beta(&corral, &lambda);
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                lambda = alpha;
                break;
            }
            // walk from λ toward α until a weight hits zero
            let mut step = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    step = step.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += step * (a - *l);
            }
            let mut k = 0;
            while k < corral.len() {
                if lambda[k] <= 1e-14 {
                    corral.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
            if corral.len() == 1 {
                lambda = vec![1.0];
                break;
            }
        }
    }
    to_beta(&corral, &lambda)
}

/// Weights of the minimum-norm point of the affine hull of `corral`:
/// solves `[M_S 1; 1ᵀ 0] [α; μ] = [0; 1]`.
#[allow(clippy::needless_range_loop)]
fn affine_minimizer(gram: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let n = k + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, &i) in corral.iter().enumerate() {
        for (c, &j) in corral.iter().enumerate() {
            a[r][c] = gram[i][j];
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][n] = 1.0;
    let scale = corral.iter().map(|&i| gram[i][i]).fold(1e-300, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][n] / a[r][r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(rows: &[&[f64]]) -> GradientSet {
        GradientSet::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    /// Brute-force 1-D grid search over β = (γ, 1 − γ).
    fn grid_pair(g1: &[f64], g2: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=10_000 {
            let gamma = i as f64 * 1e-4;
            let n: f64 = g1
                .iter()
                .zip(g2)
                .map(|(a, b)| (gamma * a + (1.0 - gamma) * b).powi(2))
                .sum();
            if n < best.0 {
                best = (n, gamma);
            }
        }
        best.1
    }

    #[test]
    fn orthogonal_unit_gradients_split_evenly() {
        assert_eq!(grid_pair(&[1.0, 0.0], &[0.0, 1.0]), 0.5);
        let s = min_norm_weights(&set(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((s.weights[0] - 0.5).abs() < 1e-12 && (s.weights[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_gradients_pick_the_shorter() {
        assert_eq!(grid_pair(&[1.0, 0.0], &[3.0, 0.0]), 1.0);
        let s = min_norm_weights(&set(&[&[1.0, 0.0], &[3.0, 0.0]])).unwrap();
        assert_eq!(s.weights, vec![1.0, 0.0]);
        assert_eq!(s.direction, vec![1.0, 0.0]);
    }

    #[test]
    fn identical_gradients_return_the_gradient() {
        let s = min_norm_weights(&set(&[&[0.3, -2.0, 1.0], &[0.3, -2.0, 1.0]])).unwrap();
        for (a, b) in s.direction.iter().zip([0.3, -2.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_matches_grid_search_and_frank_wolfe() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g1: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g2: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let gs = GradientSet::new(vec![g1.clone(), g2.clone()]).unwrap();
            let analytic = min_norm_weights(&gs).unwrap().weights;
            assert!((analytic[0] - grid_pair(&g1, &g2)).abs() <= 1e-4);
            let fw = frank_wolfe_min_norm(&gs.gram(), FW_MAX_ITER, FW_GAP_TOL);
            assert!((analytic[0] - fw[0]).abs() < 1e-6, "{analytic:?} vs {fw:?}");
        }
    }

    #[test]
    fn pair_weights_are_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let c = rng.random_range(0.01..100.0);
            let scaled = rows.iter().map(|r| r.iter().map(|x| c * x).collect()).collect();
            let a = min_norm_weights(&GradientSet::new(rows).unwrap()).unwrap().weights;
            let b = min_norm_weights(&GradientSet::new(scaled).unwrap()).unwrap().weights;
            assert!((a[0] - b[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn wolfe_agrees_with_frank_wolfe_on_easy_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let gram = GradientSet::new(rows).unwrap().gram();
            let a = wolfe_min_norm(&gram, 1e-12);
            let b = frank_wolfe_min_norm(&gram, 20_000, 1e-12);
            assert!(duality_gap(&gram, &a) <= 1e-9);
            assert!((quad_form(&gram, &a) - quad_form(&gram, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn frank_wolfe_satisfies_min_norm_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..200 {
            let m = 3 + trial % 3;
            let n = 1 + trial % 7;
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let gs = GradientSet::new(rows).unwrap();
            let s = min_norm_weights(&gs).unwrap();
            let vv: f64 = s.direction.iter().map(|x| x * x).sum();
            for g in gs.rows() {
                let gv: f64 = g.iter().zip(&s.direction).map(|(a, b)| a * b).sum();
                assert!(gv >= vv - 1e-8, "trial {trial}: {gv} < {vv}");
            }
            assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(s.weights.iter().all(|&w| w >= 0.0));
        }
    }
}
