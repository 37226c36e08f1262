//! Dense two-phase primal simplex with Bland's rule.

use super::dense::{DenseModel, RowSense};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub(crate) struct LpSolution {
    pub status: LpStatus,
    /// Values of the model's variables (empty unless optimal).
    pub x: Vec<f64>,
    /// `c . x` in the model's maximization orientation.
    pub objective: f64,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
        }
    }
}

/// How one model variable is expressed through nonnegative columns:
/// `x = offset + sum(sign * y[col])`.
struct ColumnMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn rhs(&self, row: usize) -> f64 {
        self.rows[row][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
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

    /// Maximizes `cost . z` over the allowed columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], budget: &mut usize) -> Outcome {
        let mut is_basic = vec![false; self.width];
        loop {
            is_basic.iter_mut().for_each(|b| *b = false);
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let entering = (0..self.width).find(|&j| {
                if !allowed[j] || is_basic[j] {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > COST_TOL
            });
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            if *budget == 0 {
                return Outcome::IterationLimit;
            }
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j] <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[self.width] / row[j];
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = leaving else {
                return Outcome::Unbounded;
            };
            *budget -= 1;
            self.pivot(r, j);
        }
    }
}

/// Solves the LP relaxation of `model` with the given variable bounds.
pub(crate) fn solve_lp(
    model: &DenseModel,
    lower: &[f64],
    upper: &[f64],
    feasibility_tol: f64,
    budget: &mut usize,
) -> LpSolution {
    // Column mapping for bounds.
    let mut maps = Vec::with_capacity(model.num_vars());
    let mut ncols = 0;
    let mut bound_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for j in 0..model.num_vars() {
        let (l, u) = (lower[j], upper[j]);
        if l > u {
            return LpSolution::failed(LpStatus::Infeasible);
        }
        let map = if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                bound_rows.push((vec![(col, 1.0)], u - l));
            }
            ColumnMap {
                offset: l,
                cols: vec![(col, 1.0)],
            }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap {
                offset: u,
                cols: vec![(col, -1.0)],
            }
        } else {
            ncols += 2;
            ColumnMap {
                offset: 0.0,
                cols: vec![(ncols - 2, 1.0), (ncols - 1, -1.0)],
            }
        };
        maps.push(map);
    }

    // Rows over structural columns.
    let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
    for row in &model.rows {
        let mut coefs = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coefs {
            rhs -= a * maps[j].offset;
            for &(col, sign) in &maps[j].cols {
                coefs[col] += a * sign;
            }
        }
        rows.push((coefs, row.sense, rhs));
    }
    for (entries, rhs) in bound_rows {
        let mut coefs = vec![0.0; ncols];
        for (col, v) in entries {
            coefs[col] = v;
        }
        rows.push((coefs, RowSense::Le, rhs));
    }
    for (coefs, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            coefs.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *sense = match *sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowSense::Le).count();
    let width = ncols + n_slack + n_art;
    let art_start = ncols + n_slack;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        width,
    };
    let (mut next_slack, mut next_art) = (ncols, art_start);
    let mut rhs_scale: f64 = 1.0;
    for (coefs, sense, rhs) in &rows {
        let mut row = vec![0.0; width + 1];
        row[..ncols].copy_from_slice(coefs);
        row[width] = *rhs;
        rhs_scale = rhs_scale.max(rhs.abs());
        match sense {
            RowSense::Le => {
                row[next_slack] = 1.0;
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            RowSense::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
            RowSense::Eq => {
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
    }

    // Phase 1.
    if n_art > 0 {
        let mut cost = vec![0.0; width];
        cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
        let allowed = vec![true; width];
        match tab.optimize(&cost, &allowed, budget) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => {
                return LpSolution::failed(LpStatus::IterationLimit)
            }
            // Phase 1 is bounded below by zero.
            Outcome::Unbounded => unreachable!("phase one objective is bounded"),
        }
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= art_start)
            .map(|i| tab.rhs(i))
            .sum();
        if infeasibility > feasibility_tol * (1.0 + rhs_scale) {
            return LpSolution::failed(LpStatus::Infeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; width];
    for (j, map) in maps.iter().enumerate() {
        for &(col, sign) in &map.cols {
            cost[col] += model.objective[j] * sign;
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < art_start).collect();
    match tab.optimize(&cost, &allowed, budget) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return LpSolution::failed(LpStatus::Unbounded),
        Outcome::IterationLimit => {
            return LpSolution::failed(LpStatus::IterationLimit)
        }
    }

    let mut y = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| map.offset + map.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();
    let objective = x.iter().zip(&model.objective).map(|(a, b)| a * b).sum();
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    }
}
