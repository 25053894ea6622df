//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `min cᵀx` subject to rows `aᵀx = b` or `aᵀx ≤ b` with `b ≥ 0` and
//! `x ≥ 0`. Entering column: lowest index with a negative reduced cost.
//! Leaving row: minimum ratio, ties to the lowest basic-variable index.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
}

#[derive(Debug, Clone)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub kind: RowKind,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct StandardLp<T> {
    pub cost: Vec<T>,
    pub rows: Vec<Row<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome<T> {
    Optimal { x: Vec<T>, objective: T, pivots: usize },
    Infeasible { residual: T },
}

struct Tableau<T> {
    /// Constraint rows, each `width + 1` long; the last entry is the rhs.
    rows: Vec<Vec<T>>,
    /// Reduced costs followed by the negated objective value.
    obj: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
    pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, r: usize) -> &T {
        &self.rows[r][self.width]
    }

    fn entering(&self, limit: usize) -> Option<usize> {
        let tol = T::cost_tol();
        (0..limit).find(|&c| self.obj[c] < -tol.clone())
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let ptol = T::pivot_tol();
        let tie = T::flush_tol();
        let mut best: Option<(usize, T)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let a = &row[col];
            if *a <= ptol {
                continue;
            }
            let ratio = self.rhs(r).clone() / a.clone();
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let diff = ratio.clone() - bratio.clone();
                    if diff < -tie.clone() || (diff.abs() <= tie && self.basis[r] < self.basis[br]) {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&k| !pivot_row[k].is_zero()).collect();
        let eliminate = |row: &mut Vec<T>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &k in &nz {
                row[k] = row[k].clone() - f.clone() * pivot_row[k].clone();
            }
            row[c] = T::zero();
        };
        for row in self.rows.iter_mut() {
            if !row.is_empty() {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs pivots until no admissible column improves the objective.
    fn optimize(&mut self, limit: usize, max_pivots: usize) -> Result<()> {
        while let Some(c) = self.entering(limit) {
            let r = self.leaving(c).ok_or_else(|| Error::Solver(format!("unbounded direction on column {c}")))?;
            self.pivot(r, c);
            if self.pivots > max_pivots {
                return Err(Error::Solver(format!("pivot limit {max_pivots} exceeded")));
            }
        }
        Ok(())
    }

    fn set_objective(&mut self, cost: &[T]) {
        let w = self.width;
        let mut obj = vec![T::zero(); w + 1];
        obj[..cost.len()].clone_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = if b < cost.len() { cost[b].clone() } else { T::zero() };
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[r]) {
                if !a.is_zero() {
                    *o = o.clone() - cb.clone() * a.clone();
                }
            }
        }
        self.obj = obj;
    }
}

pub fn solve<T: Scalar>(lp: &StandardLp<T>) -> Result<SimplexOutcome<T>> {
    let n = lp.cost.len();
    let slacks = lp.rows.iter().filter(|r| r.kind == RowKind::Le).count();
    let artificials = lp.rows.len() - slacks;
    let width = n + slacks + artificials;

    let mut rows = Vec::with_capacity(lp.rows.len());
    let mut basis = Vec::with_capacity(lp.rows.len());
    let (mut next_slack, mut next_art) = (n, n + slacks);
    for row in &lp.rows {
        if row.rhs < T::zero() {
            return Err(Error::Solver("negative right-hand side".into()));
        }
        let mut dense = vec![T::zero(); width + 1];
        for (c, v) in &row.coeffs {
            dense[*c] = dense[*c].clone() + v.clone();
        }
        dense[width] = row.rhs.clone();
        match row.kind {
            RowKind::Le => {
                dense[next_slack] = T::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            RowKind::Eq => {
                dense[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(dense);
    }

    let mut tab = Tableau { rows, obj: Vec::new(), basis, width, first_artificial: n + slacks, pivots: 0 };
    let max_pivots = 200 * (width + lp.rows.len()) + 1000;

    // Phase 1: minimise the sum of artificials.
    let mut phase1 = vec![T::zero(); width];
    for v in phase1.iter_mut().skip(tab.first_artificial) {
        *v = T::one();
    }
    tab.set_objective(&phase1);
    tab.optimize(width, max_pivots)?;
    let residual = -tab.obj[width].clone();
    if residual > T::feasibility_tol() {
        return Ok(SimplexOutcome::Infeasible { residual });
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= tab.first_artificial {
            let col = (0..tab.first_artificial).find(|&c| tab.rows[r][c].abs() > T::pivot_tol());
            match col {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 on the original costs; artificials may not re-enter.
    tab.set_objective(&lp.cost);
    let limit = tab.first_artificial;
    tab.optimize(limit, max_pivots)?;

    let mut x = vec![T::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(r).clone();
        }
    }
    let objective = lp.cost.iter().zip(&x).fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
    Ok(SimplexOutcome::Optimal { x, objective, pivots: tab.pivots })
}
