//! Time-indexed LP relaxation and its rectangle view.
//!
//! Variable `x[i][j][s]` is the fraction of job `j` started on machine `i` at
//! integer time `s`, for `0 ≤ s ≤ T − p_ij`. The job occupies the unit slots
//! `s..s+p_ij`; capacity row `(i, t)` sums every variable whose slots include `t`.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::Scalar;
use simplex::{Row, RowKind, SimplexOutcome, StandardLp};

/// Σ_j max_i p_ij: every job can run back to back on any eligible machine.
pub fn default_horizon(inst: &Instance) -> u64 {
    (0..inst.jobs()).map(|j| inst.eligible(j).map(|(_, p)| p).max().unwrap_or(0)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub machine: usize,
    pub job: usize,
    pub start: u64,
    pub len: u64,
}

#[derive(Debug, Clone)]
pub struct CapacityRow {
    pub machine: usize,
    pub time: u64,
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub horizon: u64,
    pub machines: usize,
    pub jobs: usize,
    /// Sorted by (machine, job, start).
    pub columns: Vec<Column>,
    /// w_j (s + p_ij) per column.
    pub cost: Vec<T>,
    pub coverage: Vec<Vec<usize>>,
    pub capacity: Vec<CapacityRow>,
}

pub fn build_lp<T: Scalar>(inst: &Instance, horizon: u64) -> Result<LpProblem<T>> {
    for j in 0..inst.jobs() {
        let needed = inst.eligible(j).map(|(_, p)| p).min().unwrap_or(u64::MAX);
        if needed > horizon {
            return Err(Error::InfeasibleHorizon { horizon, job: j, needed });
        }
    }
    let mut columns = Vec::new();
    let mut cost = Vec::new();
    let mut coverage = vec![Vec::new(); inst.jobs()];
    for i in 0..inst.machines() {
        for j in 0..inst.jobs() {
            let Some(p) = inst.p(i, j) else { continue };
            if p > horizon {
                continue;
            }
            let w = T::from_f64_lossy(inst.weight(j));
            for s in 0..=horizon - p {
                coverage[j].push(columns.len());
                cost.push(w.clone() * T::from_count(s + p));
                columns.push(Column { machine: i, job: j, start: s, len: p });
            }
        }
    }
    let mut capacity = Vec::new();
    for i in 0..inst.machines() {
        for t in 0..horizon {
            let cols: Vec<usize> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.machine == i && c.start <= t && t < c.start + c.len)
                .map(|(k, _)| k)
                .collect();
            if !cols.is_empty() {
                capacity.push(CapacityRow { machine: i, time: t, columns: cols });
            }
        }
    }
    Ok(LpProblem { horizon, machines: inst.machines(), jobs: inst.jobs(), columns, cost, coverage, capacity })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// One value per column of the problem; empty when infeasible.
    pub values: Vec<T>,
    pub objective: T,
    pub pivots: usize,
}

/// Solves the relaxation, flushes values within `T::flush_tol()` of zero and
/// renormalises every job's total to exactly one.
pub fn solve_lp<T: Scalar>(prob: &LpProblem<T>) -> Result<LpSolution<T>> {
    let one = T::one();
    let mut rows = Vec::with_capacity(prob.jobs + prob.capacity.len());
    for cols in &prob.coverage {
        rows.push(Row {
            coeffs: cols.iter().map(|&c| (c, one.clone())).collect(),
            kind: RowKind::Eq,
            rhs: one.clone(),
        });
    }
    for cap in &prob.capacity {
        rows.push(Row {
            coeffs: cap.columns.iter().map(|&c| (c, one.clone())).collect(),
            kind: RowKind::Le,
            rhs: one.clone(),
        });
    }
    let lp = StandardLp { cost: prob.cost.clone(), rows };
    match simplex::solve(&lp)? {
        SimplexOutcome::Infeasible { residual } => {
            Ok(LpSolution { status: LpStatus::Infeasible, values: Vec::new(), objective: residual, pivots: 0 })
        }
        SimplexOutcome::Optimal { mut x, pivots, .. } => {
            let neg_limit = -T::feasibility_tol();
            for v in x.iter_mut() {
                if *v < neg_limit {
                    return Err(Error::Solver(format!("negative primal value {v:?}")));
                }
                if *v < T::zero() || v.abs() < T::flush_tol() {
                    *v = T::zero();
                }
            }
            for cols in &prob.coverage {
                let total = cols.iter().fold(T::zero(), |a, &c| a + x[c].clone());
                if total <= T::zero() {
                    return Err(Error::Solver("job with zero coverage".into()));
                }
                for &c in cols {
                    x[c] = x[c].clone() / total.clone();
                }
            }
            let objective = objective_of(prob, &x);
            Ok(LpSolution { status: LpStatus::Optimal, values: x, objective, pivots })
        }
    }
}

fn objective_of<T: Scalar>(prob: &LpProblem<T>, x: &[T]) -> T {
    prob.cost.iter().zip(x).fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
}

/// Σ_j w_j Σ_{i,s} x_ijs (s + p_ij).
pub fn lp_objective<T: Scalar>(prob: &LpProblem<T>, sol: &LpSolution<T>) -> T {
    if sol.values.is_empty() {
        return T::zero();
    }
    objective_of(prob, &sol.values)
}

/// A positive LP variable viewed as a box of height `height` over `(start, start + len]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub machine: usize,
    pub job: usize,
    pub start: u64,
    pub len: u64,
    pub height: f64,
}

impl Rectangle {
    pub fn end(&self) -> u64 {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectangleSet {
    machines: usize,
    jobs: usize,
    rects: Vec<Rectangle>,
    /// x_ij, row-major by machine.
    heights: Vec<f64>,
    /// Index range into `rects` per (machine, job).
    spans: Vec<(usize, usize)>,
}

impl RectangleSet {
    /// Builds the set; rectangles with non-positive height are dropped.
    pub fn new(machines: usize, jobs: usize, mut rects: Vec<Rectangle>) -> Self {
        rects.retain(|r| r.height > 0.0);
        rects.sort_by_key(|r| (r.machine, r.job, r.start));
        let mut heights = vec![0.0; machines * jobs];
        let mut spans = vec![(0, 0); machines * jobs];
        let mut k = 0;
        while k < rects.len() {
            let key = (rects[k].machine, rects[k].job);
            let begin = k;
            while k < rects.len() && (rects[k].machine, rects[k].job) == key {
                heights[key.0 * jobs + key.1] += rects[k].height;
                k += 1;
            }
            spans[key.0 * jobs + key.1] = (begin, k);
        }
        Self { machines, jobs, rects, heights, spans }
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn rects(&self) -> &[Rectangle] {
        &self.rects
    }

    /// x_ij: total height of job `job` on `machine`.
    pub fn height(&self, machine: usize, job: usize) -> f64 {
        self.heights[machine * self.jobs + job]
    }

    pub fn of_pair(&self, machine: usize, job: usize) -> &[Rectangle] {
        let (a, b) = self.spans[machine * self.jobs + job];
        &self.rects[a..b]
    }

    pub fn on_machine(&self, machine: usize) -> impl Iterator<Item = (usize, &Rectangle)> + '_ {
        self.rects.iter().enumerate().filter(move |(_, r)| r.machine == machine)
    }

    /// Load at unit slot `t`, i.e. total height of rectangles covering `(t, t+1]`.
    pub fn load(&self, machine: usize, t: u64) -> f64 {
        self.on_machine(machine).filter(|(_, r)| r.start <= t && t < r.end()).map(|(_, r)| r.height).sum()
    }

    pub fn max_time(&self) -> u64 {
        self.rects.iter().map(Rectangle::end).max().unwrap_or(0)
    }

    /// Per-job totals and per-slot loads, tolerance 1e-7.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        for j in 0..self.jobs {
            let total: f64 = (0..self.machines).map(|i| self.height(i, j)).sum();
            if (total - 1.0).abs() > 1e-7 {
                out.push(format!("job {j} has total height {total}"));
            }
        }
        for i in 0..self.machines {
            for t in 0..self.max_time() {
                let load = self.load(i, t);
                if load > 1.0 + 1e-7 {
                    out.push(format!("machine {i} load {load} at slot {t}"));
                }
            }
        }
        out
    }
}

pub fn extract_rectangles<T: Scalar>(prob: &LpProblem<T>, sol: &LpSolution<T>) -> RectangleSet {
    let rects = prob
        .columns
        .iter()
        .zip(&sol.values)
        .filter(|(_, v)| **v > T::zero())
        .map(|(c, v)| Rectangle {
            machine: c.machine,
            job: c.job,
            start: c.start,
            len: c.len,
            height: v.to_f64_lossy(),
        })
        .collect();
    RectangleSet::new(prob.machines, prob.jobs, rects)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpEntry {
    pub i: usize,
    pub j: usize,
    pub s: u64,
    pub v: f64,
}

/// File form of a solution: positive entries only, sorted by (i, j, s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolutionFile {
    pub objective: f64,
    pub x: Vec<LpEntry>,
}

impl LpSolutionFile {
    pub fn from_solution<T: Scalar>(prob: &LpProblem<T>, sol: &LpSolution<T>) -> Self {
        let x = prob
            .columns
            .iter()
            .zip(&sol.values)
            .filter(|(_, v)| **v > T::zero())
            .map(|(c, v)| LpEntry { i: c.machine, j: c.job, s: c.start, v: v.to_f64_lossy() })
            .collect();
        Self { objective: lp_objective(prob, sol).to_f64_lossy(), x }
    }
}
