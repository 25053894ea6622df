//! Iterative fair contention resolution.
//!
//! Rounds a fractional job-to-machine assignment to an integral one while
//! preserving every marginal `P[i ← j] = x_ij`, keeping pairs on a machine
//! negatively correlated, and making pairs that share a group on a machine
//! strongly negatively correlated:
//! `P[i ← j ∧ i ← j'] ≤ (e^{x_ij} + e^{x_ij'}) / (1 + e) · x_ij x_ij'`.
//!
//! One iteration, over the jobs still unassigned:
//!
//! 1. every pair `(i, j)` draws `Ñ_ij ~ TildePois(x_ij)` potential tickets;
//! 2. every group on machine `i` recommends at most one member, member `j`
//!    with probability `x_ij`;
//! 3. the potential tickets of recommended pairs become real;
//! 4. every job with at least one real ticket picks one uniformly and goes
//!    to the machine that issued it.
//!
//! Each iteration assigns a job with probability `1 − 1/e` and iterations
//! repeat with fresh randomness until every job is placed.
//!
//! Randomness layout: iteration `ℓ` of trial `t` reads ChaCha stream `ℓ`
//! under key `(seed, t)`, consuming one uniform per `(machine, job)` ticket
//! slot, then per machine one per listed group followed by one per job
//! (the implicit singleton slot), then one per job for the ticket pick.
//! Slots of inactive jobs are consumed and discarded, so a job's draws never
//! depend on which other jobs are still active.

pub mod poisson;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamKey};

pub use poisson::{pois_pmf, sample_pois, sample_tilde_pois, tilde_pois_pmf};

const SUM_TOL: f64 = 1e-9;

/// `x[i][j]` stored row-major by machine.
#[derive(Debug, Clone, PartialEq)]
pub struct FracAssignment {
    machines: usize,
    jobs: usize,
    x: Vec<f64>,
}

impl FracAssignment {
    /// `x[i][j]` with every entry in [0, 1] and every job summing to 1 ± 1e-9.
    pub fn new(x: Vec<Vec<f64>>) -> Result<Self> {
        let machines = x.len();
        let jobs = x.first().map_or(0, Vec::len);
        if machines == 0 || jobs == 0 {
            return Err(Error::InvalidAssignment("empty assignment".into()));
        }
        if x.iter().any(|row| row.len() != jobs) {
            return Err(Error::InvalidAssignment("ragged rows".into()));
        }
        let flat: Vec<f64> = x.into_iter().flatten().collect();
        if let Some(v) = flat.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidAssignment(format!("entry {v} outside [0, 1]")));
        }
        let frac = Self { machines, jobs, x: flat };
        for j in 0..jobs {
            let total: f64 = (0..machines).map(|i| frac.get(i, j)).sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidAssignment(format!("job {j} sums to {total}")));
            }
        }
        Ok(frac)
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn get(&self, machine: usize, job: usize) -> f64 {
        self.x[machine * self.jobs + job]
    }
}

/// Per machine, a family of disjoint job subsets. Jobs outside every listed
/// subset are implicit singletons.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grouping {
    groups: Vec<Vec<Vec<usize>>>,
}

impl Grouping {
    pub fn singletons(machines: usize) -> Self {
        Self { groups: vec![Vec::new(); machines] }
    }

    pub fn new(groups: Vec<Vec<Vec<usize>>>) -> Self {
        Self { groups }
    }

    pub fn machines(&self) -> usize {
        self.groups.len()
    }

    pub fn groups_on(&self, machine: usize) -> &[Vec<usize>] {
        &self.groups[machine]
    }

    pub fn push(&mut self, machine: usize, group: Vec<usize>) {
        self.groups[machine].push(group);
    }

    pub fn together(&self, machine: usize, a: usize, b: usize) -> bool {
        self.groups[machine].iter().any(|g| g.contains(&a) && g.contains(&b))
    }

    /// Disjointness, index ranges and the Σ x ≤ 1 capacity of every group.
    pub fn validate(&self, frac: &FracAssignment) -> Result<()> {
        if self.groups.len() != frac.machines() {
            return Err(Error::InvalidGrouping {
                machine: self.groups.len(),
                reason: format!("grouping has {} machines, expected {}", self.groups.len(), frac.machines()),
            });
        }
        for (i, family) in self.groups.iter().enumerate() {
            let mut seen = vec![false; frac.jobs()];
            for g in family {
                let mut total = 0.0;
                for &j in g {
                    if j >= frac.jobs() {
                        return Err(Error::InvalidGrouping { machine: i, reason: format!("job {j} out of range") });
                    }
                    if std::mem::replace(&mut seen[j], true) {
                        return Err(Error::InvalidGrouping { machine: i, reason: format!("job {j} in two groups") });
                    }
                    total += frac.get(i, j);
                }
                if total > 1.0 + SUM_TOL {
                    return Err(Error::InvalidGrouping {
                        machine: i,
                        reason: format!("group height {total} exceeds 1"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RoundingOptions {
    /// Defaults to [`default_max_iters`].
    pub max_iters: Option<u32>,
    /// Keep ticket and recommendation counts in every [`IterationOutcome`].
    pub diagnostics: bool,
    /// Test hook: every pair draws its recommendation independently, as if
    /// all groups were singletons. Breaks strong negative correlation.
    #[doc(hidden)]
    pub tamper_independent: bool,
}

/// Counts of one iteration, row-major by machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub potential: Vec<u32>,
    pub real: Vec<u32>,
    pub recommended: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    /// Machine per job; `None` for inactive jobs and jobs without real tickets.
    pub assigned: Vec<Option<usize>>,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Machine of every job.
    #[serde(rename = "assign")]
    pub machine: Vec<usize>,
    /// 1-based iteration in which every job was assigned.
    #[serde(rename = "iters")]
    pub iteration: Vec<u32>,
}

impl Assignment {
    pub fn iterations(&self) -> u32 {
        self.iteration.iter().copied().max().unwrap_or(0)
    }
}

/// 64 + ⌈8 ln n⌉.
pub fn default_max_iters(jobs: usize) -> u32 {
    64 + (8.0 * (jobs.max(1) as f64).ln()).ceil() as u32
}

/// Grouping indexed for fast per-iteration access.
struct Layout<'a> {
    frac: &'a FracAssignment,
    groups: &'a Grouping,
    /// `grouped[i * n + j]`: job `j` belongs to a listed group on machine `i`.
    grouped: Vec<bool>,
}

impl<'a> Layout<'a> {
    fn new(frac: &'a FracAssignment, groups: &'a Grouping) -> Self {
        let n = frac.jobs();
        let mut grouped = vec![false; frac.machines() * n];
        for i in 0..frac.machines() {
            for g in groups.groups_on(i) {
                for &j in g {
                    grouped[i * n + j] = true;
                }
            }
        }
        Self { frac, groups, grouped }
    }

    fn iterate<R: Rng + ?Sized>(&self, active: &[bool], rng: &mut R, opts: &RoundingOptions) -> IterationOutcome {
        let (m, n) = (self.frac.machines(), self.frac.jobs());
        let x = |i: usize, j: usize| self.frac.get(i, j);

        let mut potential = vec![0u32; m * n];
        for i in 0..m {
            for j in 0..n {
                let u: f64 = rng.gen();
                let xij = x(i, j);
                if active[j] && xij > 0.0 {
                    potential[i * n + j] = poisson::tilde_pois_quantile(xij.min(1.0), u);
                }
            }
        }

        let mut recommended = vec![false; m * n];
        for i in 0..m {
            for g in self.groups.groups_on(i) {
                let u: f64 = rng.gen();
                if opts.tamper_independent {
                    continue;
                }
                let mut cum = 0.0;
                for &j in g.iter().filter(|&&j| active[j]) {
                    cum += x(i, j);
                    if u < cum {
                        recommended[i * n + j] = true;
                        break;
                    }
                }
            }
            for j in 0..n {
                let u: f64 = rng.gen();
                let standalone = opts.tamper_independent || !self.grouped[i * n + j];
                if active[j] && standalone && u < x(i, j) {
                    recommended[i * n + j] = true;
                }
            }
        }

        let real: Vec<u32> = potential.iter().zip(&recommended).map(|(&t, &b)| if b { t } else { 0 }).collect();

        let mut assigned = vec![None; n];
        for j in 0..n {
            let u: f64 = rng.gen();
            if !active[j] {
                continue;
            }
            let total: u32 = (0..m).map(|i| real[i * n + j]).sum();
            if total == 0 {
                continue;
            }
            let mut pick = ((u * f64::from(total)) as u32).min(total - 1);
            for i in 0..m {
                let t = real[i * n + j];
                if pick < t {
                    assigned[j] = Some(i);
                    break;
                }
                pick -= t;
            }
        }

        let diagnostics = opts.diagnostics.then(|| Diagnostics { potential, real, recommended });
        IterationOutcome { assigned, diagnostics }
    }
}

fn check_active(frac: &FracAssignment, active: &[bool]) -> Result<()> {
    if active.len() != frac.jobs() {
        return Err(Error::InvalidAssignment(format!(
            "active set has {} entries for {} jobs",
            active.len(),
            frac.jobs()
        )));
    }
    Ok(())
}

/// One round over the `active` jobs.
pub fn run_round_iteration<R: Rng + ?Sized>(
    frac: &FracAssignment,
    groups: &Grouping,
    active: &[bool],
    rng: &mut R,
    opts: &RoundingOptions,
) -> Result<IterationOutcome> {
    groups.validate(frac)?;
    check_active(frac, active)?;
    Ok(Layout::new(frac, groups).iterate(active, rng, opts))
}

/// Repeats [`run_round_iteration`] on the unassigned jobs until every job is
/// placed. Iteration `ℓ` (1-based) uses stream `ℓ` of `key`.
pub fn resolve(frac: &FracAssignment, groups: &Grouping, key: StreamKey, opts: &RoundingOptions) -> Result<Assignment> {
    groups.validate(frac)?;
    resolve_validated(&Layout::new(frac, groups), key, opts)
}

fn resolve_validated(layout: &Layout<'_>, key: StreamKey, opts: &RoundingOptions) -> Result<Assignment> {
    let n = layout.frac.jobs();
    let max_iters = opts.max_iters.unwrap_or_else(|| default_max_iters(n));
    let mut active = vec![true; n];
    let mut remaining = n;
    let mut machine = vec![usize::MAX; n];
    let mut iteration = vec![0u32; n];
    let mut ell = 0u32;
    while remaining > 0 {
        if ell == max_iters {
            return Err(Error::Nontermination { remaining, iterations: ell });
        }
        ell += 1;
        let mut rng = key.rng(Purpose::Contention, u64::from(ell));
        let outcome = layout.iterate(&active, &mut rng, opts);
        for (j, a) in outcome.assigned.iter().enumerate() {
            if let Some(i) = *a {
                machine[j] = i;
                iteration[j] = ell;
                active[j] = false;
                remaining -= 1;
            }
        }
    }
    Ok(Assignment { machine, iteration })
}

/// Reusable resolver for many trials over the same inputs.
pub struct Resolver<'a> {
    layout: Layout<'a>,
    opts: RoundingOptions,
}

impl<'a> Resolver<'a> {
    pub fn new(frac: &'a FracAssignment, groups: &'a Grouping, opts: RoundingOptions) -> Result<Self> {
        groups.validate(frac)?;
        Ok(Self { layout: Layout::new(frac, groups), opts })
    }

    pub fn resolve(&self, key: StreamKey) -> Result<Assignment> {
        resolve_validated(&self.layout, key, &self.opts)
    }
}
