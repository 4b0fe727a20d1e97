//! Small dense two-phase simplex method.
//!
//! Solves `max cᵀx` subject to linear (in)equalities and `x ≥ 0`. Meant for
//! the handful of variables an EPO step needs; Bland's rule rules out cycling.

const PIVOT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// Constraint rows; the last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximises `cost · x` from the current feasible basis over columns
    /// allowed by `enterable`. Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[f64], enterable: &[bool]) -> bool {
        loop {
            let entering = (0..self.cols).find(|&j| {
                enterable[j] && !self.basis.contains(&j) && {
                    let reduced = cost[j]
                        - self
                            .rows
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &b)| cost[b] * row[j])
                            .sum::<f64>();
                    reduced > PIVOT_EPS
                }
            });
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// `max objective · x` subject to `constraints` and `x ≥ 0`.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> LpOutcome {
    let n = objective.len();
    let k = constraints.len();
    let extra = constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let artificial_start = n + extra;
    let artificials = constraints
        .iter()
        .filter(|c| {
            let rel = normalized_relation(c);
            rel != Relation::Le
        })
        .count();
    let cols = artificial_start + artificials;

    let mut rows = Vec::with_capacity(k);
    let mut basis = Vec::with_capacity(k);
    let (mut slack, mut art) = (n, artificial_start);
    for c in constraints {
        assert_eq!(c.coeffs.len(), n, "constraint width must match objective");
        let flip = c.rhs < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for (dst, &a) in row.iter_mut().zip(&c.coeffs) {
            *dst = sign * a;
        }
        row[cols] = sign * c.rhs;
        match normalized_relation(c) {
            Relation::Le => {
                row[slack] = 1.0;
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, cols };

    // phase 1: drive the artificial variables to zero
    if artificials > 0 {
        let mut cost = vec![0.0; cols];
        cost[artificial_start..].iter_mut().for_each(|c| *c = -1.0);
        let all = vec![true; cols];
        t.optimize(&cost, &all);
        let infeasibility: f64 = (0..k)
            .filter(|&i| t.basis[i] >= artificial_start)
            .map(|i| t.rhs(i))
            .sum();
        let scale = 1.0 + constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // pivot remaining (zero-valued) artificials out, dropping redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= artificial_start {
                match (0..artificial_start).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // phase 2
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(objective);
    let enterable: Vec<bool> = (0..cols).map(|j| j < artificial_start).collect();
    if !t.optimize(&cost, &enterable) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, objective: value }
}

fn normalized_relation(c: &Constraint) -> Relation {
    match (c.relation, c.rhs < 0.0) {
        (Relation::Le, true) => Relation::Ge,
        (Relation::Ge, true) => Relation::Le,
        (rel, _) => rel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18  →  (2, 6), 36
        let (x, obj) = optimal(maximize(
            &[3.0, 5.0],
            &[
                Constraint::new(vec![1.0, 0.0], Relation::Le, 4.0),
                Constraint::new(vec![0.0, 2.0], Relation::Le, 12.0),
                Constraint::new(vec![3.0, 2.0], Relation::Le, 18.0),
            ],
        ));
        assert!((obj - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_with_extra_inequality() {
        // max x0 - x1 on the simplex with x0 - 2 x1 ≤ 0  →  (2/3, 1/3)
        let (x, obj) = optimal(maximize(
            &[1.0, -1.0],
            &[
                Constraint::new(vec![1.0, 1.0], Relation::Eq, 1.0),
                Constraint::new(vec![-1.0, 2.0], Relation::Ge, 0.0),
            ],
        ));
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-12, "{x:?}");
        assert!((obj - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_ge_rows() {
        // max -x - y with x + y ≥ 2, -x ≤ -0.5  →  objective -2
        let (x, obj) = optimal(maximize(
            &[-1.0, -1.0],
            &[
                Constraint::new(vec![1.0, 1.0], Relation::Ge, 2.0),
                Constraint::new(vec![-1.0, 0.0], Relation::Le, -0.5),
            ],
        ));
        assert!((obj + 2.0).abs() < 1e-12);
        assert!(x[0] >= 0.5 - 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let out = maximize(
            &[1.0],
            &[
                Constraint::new(vec![1.0], Relation::Le, 1.0),
                Constraint::new(vec![1.0], Relation::Ge, 2.0),
            ],
        );
        assert_eq!(out, LpOutcome::Infeasible);
        let out = maximize(&[1.0, 0.0], &[Constraint::new(vec![0.0, 1.0], Relation::Le, 1.0)]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let (_, obj) = optimal(maximize(
            &[1.0, 2.0, 3.0],
            &[
                Constraint::new(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0),
                Constraint::new(vec![2.0, 2.0, 2.0], Relation::Eq, 2.0),
            ],
        ));
        assert!((obj - 3.0).abs() < 1e-12);
    }
}
