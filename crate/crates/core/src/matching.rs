//! Min-cost assignment and the two solvers built on it: linear rate
//! functions (one channel per user suffices) and equal consecutive blocks.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Allocation, MpcaInstance, RateModel, SolveReport};
use crate::waterfill::{fill_owned_channels, waterfill_power};

/// Square cost matrix with explicitly forbidden cells. Rows at or beyond
/// `real_rows` are artificial padding with zero cost everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    size: usize,
    real_rows: usize,
    cost: Vec<f64>,
    allowed: Vec<bool>,
}

impl AssignmentProblem {
    /// Square matrix, every cell allowed.
    pub fn new(cost: Vec<Vec<f64>>) -> Result<Self> {
        let n = cost.len();
        if cost.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "assignment cost matrix must be square".into(),
            ));
        }
        Self::padded(
            cost.into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
            n,
        )
    }

    /// `rows` has one entry per real left node (`None` = forbidden); zero-cost
    /// artificial rows are appended until the matrix is `columns x columns`.
    pub fn padded(rows: Vec<Vec<Option<f64>>>, columns: usize) -> Result<Self> {
        if rows.len() > columns {
            return Err(Error::DimensionMismatch(format!(
                "{} rows cannot be matched into {columns} columns",
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != columns) {
            return Err(Error::DimensionMismatch(format!(
                "row {r} has {} entries, expected {columns}",
                rows[r].len()
            )));
        }
        if rows.iter().flatten().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "assignment costs must be finite".into(),
            ));
        }
        let real_rows = rows.len();
        let mut cost = Vec::with_capacity(columns * columns);
        let mut allowed = Vec::with_capacity(columns * columns);
        for row in rows {
            for c in row {
                cost.push(c.unwrap_or(0.0));
                allowed.push(c.is_some());
            }
        }
        cost.resize(columns * columns, 0.0);
        allowed.resize(columns * columns, true);
        Ok(AssignmentProblem {
            size: columns,
            real_rows,
            cost,
            allowed,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_artificial(&self, row: usize) -> bool {
        row >= self.real_rows
    }

    pub fn cost(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.size + col;
        self.allowed[i].then_some(self.cost[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    /// Summed in row order.
    pub total_cost: f64,
}

fn total(problem: &AssignmentProblem, row_to_col: &[usize]) -> f64 {
    row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| problem.cost[i * problem.size + j])
        .sum()
}

/// Shortest augmenting paths with potentials, O(n^3). Returns the matching
/// and the row/column potentials (reduced costs `c - u - v >= 0`).
fn hungarian(p: &AssignmentProblem) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let n = p.size;
    // 1-based, column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cell = (i0 - 1) * n + (j - 1);
                if p.allowed[cell] {
                    let cur = p.cost[cell] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == f64::INFINITY {
                return Err(Error::Infeasible(
                    "no perfect matching avoids the forbidden cells".into(),
                ));
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    Ok((row_to_col, u[1..].to_vec(), v[1..].to_vec()))
}

/// Among perfect matchings on the tight edges, picks the lexicographically
/// smallest row-to-column vector. Any perfect matching on tight edges is
/// optimal for the dual potentials found.
fn lexicographic_tight(p: &AssignmentProblem, start: &[usize], u: &[f64], v: &[f64]) -> Vec<usize> {
    let n = p.size;
    let scale = 1.0 + p.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let tight: Vec<bool> = (0..n * n)
        .map(|cell| p.allowed[cell] && p.cost[cell] - u[cell / n] - v[cell % n] <= 1e-10 * scale)
        .collect();
    let mut row_to_col = start.to_vec();
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed_col = vec![false; n];

    // alternating path from a free row to `target` over unfixed rows > floor
    #[allow(clippy::too_many_arguments)]
    fn augment(
        row: usize,
        target: usize,
        n: usize,
        floor: usize,
        tight: &[bool],
        fixed_col: &[bool],
        seen: &mut [bool],
        row_to_col: &mut [usize],
        col_to_row: &mut [usize],
    ) -> bool {
        for c in 0..n {
            if !tight[row * n + c] || fixed_col[c] || seen[c] {
                continue;
            }
            seen[c] = true;
            let ok = c == target || {
                let next = col_to_row[c];
                next > floor
                    && augment(
                        next, target, n, floor, tight, fixed_col, seen, row_to_col, col_to_row,
                    )
            };
            if ok {
                row_to_col[row] = c;
                col_to_row[c] = row;
                return true;
            }
        }
        false
    }

    for i in 0..n {
        for j in 0..n {
            if !tight[i * n + j] || fixed_col[j] {
                continue;
            }
            let j0 = row_to_col[i];
            if j0 == j {
                fixed_col[j] = true;
                break;
            }
            let displaced = col_to_row[j];
            let (saved_r, saved_c) = (row_to_col.clone(), col_to_row.clone());
            row_to_col[i] = j;
            col_to_row[j] = i;
            let mut seen = vec![false; n];
            seen[j] = true;
            if augment(
                displaced,
                j0,
                n,
                i,
                &tight,
                &fixed_col,
                &mut seen,
                &mut row_to_col,
                &mut col_to_row,
            ) {
                fixed_col[j] = true;
                break;
            }
            row_to_col = saved_r;
            col_to_row = saved_c;
        }
    }
    row_to_col
}

/// Minimum-cost perfect matching. Among optimal matchings the
/// lexicographically smallest row-to-column vector is returned.
pub fn solve_assignment(problem: &AssignmentProblem) -> Result<Assignment> {
    let (base, u, v) = hungarian(problem)?;
    let base_cost = total(problem, &base);
    let lex = lexicographic_tight(problem, &base, &u, &v);
    let lex_cost = total(problem, &lex);
    let scale = 1.0 + base_cost.abs();
    let row_to_col = if lex
        .iter()
        .enumerate()
        .all(|(i, &j)| problem.allowed[i * problem.size + j])
        && lex_cost <= base_cost + 1e-12 * scale
    {
        lex
    } else {
        base
    };
    let total_cost = total(problem, &row_to_col);
    Ok(Assignment {
        row_to_col,
        total_cost,
    })
}

/// Linear rates: each user puts its whole rate on one channel, so the
/// problem is an assignment with edge cost `R_m / l_mn` (the power actually
/// spent) and `N - M` zero-cost artificial users.
pub fn solve_linear_rate(instance: &MpcaInstance) -> Result<SolveReport> {
    let started = Instant::now();
    if instance.rate_model() != RateModel::Linear {
        return Err(Error::WrongModel(
            "linear-rate matching needs the linear rate model".into(),
        ));
    }
    let n = instance.num_channels();
    let rows = (0..instance.num_users())
        .map(|m| {
            let r = instance.rate_target(m);
            instance.gains_row(m).iter().map(|&l| Some(r / l)).collect()
        })
        .collect();
    let assignment = solve_assignment(&AssignmentProblem::padded(rows, n)?)?;
    let mut owners = vec![None; n];
    let mut rates = vec![0.0; n];
    for m in 0..instance.num_users() {
        let c = assignment.row_to_col[m];
        owners[c] = Some(m);
        rates[c] = instance.rate_target(m);
    }
    let allocation = Allocation::new(instance, owners, rates);
    Ok(SolveReport::new(
        instance,
        allocation,
        "linear-match",
        started,
    ))
}

/// Users each take one of the `M` fixed blocks of `N / M` consecutive
/// channels; edge cost is the user's water-filled power on the block.
pub fn solve_equal_blocks(instance: &MpcaInstance) -> Result<SolveReport> {
    let started = Instant::now();
    let (users, n) = (instance.num_users(), instance.num_channels());
    if n % users != 0 {
        return Err(Error::NotDivisible { users, channels: n });
    }
    let width = n / users;
    let model = instance.rate_model();
    let rows = (0..users)
        .map(|m| {
            let row = instance.gains_row(m);
            (0..users)
                .map(|b| {
                    Some(waterfill_power(
                        model,
                        &row[b * width..(b + 1) * width],
                        instance.rate_target(m),
                    ))
                })
                .collect()
        })
        .collect();
    let assignment = solve_assignment(&AssignmentProblem::padded(rows, users)?)?;
    let mut owners = vec![None; n];
    for (m, &b) in assignment.row_to_col.iter().enumerate() {
        owners[b * width..(b + 1) * width]
            .iter_mut()
            .for_each(|o| *o = Some(m));
    }
    let allocation = fill_owned_channels(instance, owners);
    Ok(SolveReport::new(
        instance,
        allocation,
        "block-match",
        started,
    ))
}
