//! Monte Carlo report engine.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Default σ multiple for every statistical verdict.
pub const SIGMA_K: f64 = 4.0;

/// Trials handled sequentially per parallel task. Fixed so that results do
/// not depend on the thread count.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// estimate ≤ bound + kσ
    AtMost,
    /// estimate ≥ bound − kσ
    AtLeast,
    /// |estimate − bound| ≤ kσ
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEntry {
    pub test_id: String,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub sigma_k: f64,
    pub verdict: Verdict,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl McEntry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        test_id: impl Into<String>,
        check: Check,
        estimate: f64,
        stderr: f64,
        bound: f64,
        sigma_k: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        let slack = sigma_k * stderr;
        let pass = match check {
            Check::AtMost => estimate <= bound + slack,
            Check::AtLeast => estimate >= bound - slack,
            Check::Equal => (estimate - bound).abs() <= slack,
        };
        Self {
            test_id: test_id.into(),
            estimate,
            stderr,
            bound,
            sigma_k,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            trials,
            seed,
        }
    }

    /// Deterministic comparison; stderr and σ multiple are zero.
    pub fn exact(test_id: impl Into<String>, check: Check, value: f64, bound: f64, trials: u64, seed: u64) -> Self {
        Self::new(test_id, check, value, 0.0, bound, 0.0, trials, seed)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct McReport {
    pub entries: Vec<McEntry>,
}

impl McReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: McEntry) {
        self.entries.push(entry);
    }

    /// Appends `other` with every test id prefixed by `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: McReport) {
        self.entries.extend(other.entries.into_iter().map(|mut e| {
            e.test_id = format!("{prefix}/{}", e.test_id);
            e
        }));
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(McEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &McEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn find(&self, test_id: &str) -> Option<&McEntry> {
        self.entries.iter().find(|e| e.test_id == test_id)
    }

    /// Entries whose id starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a McEntry> {
        self.entries.iter().filter(move |e| e.test_id.starts_with(prefix))
    }

    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    }

    /// CSV with a leading `# ...` comment line per element of `comments`.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}").map_err(|e| Error::Report(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(out);
        if self.entries.is_empty() {
            w.write_record(["test_id", "estimate", "stderr", "bound", "sigma_k", "verdict", "trials", "seed"])
                .map_err(|e| Error::Report(e.to_string()))?;
        }
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::Report(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Report(e.to_string()))
    }
}

/// Folds trials `0..trials` in fixed-size chunks in parallel and merges the
/// chunk results in trial order, so float accumulators are reproducible.
pub fn fold_trials<A, I, S, M>(trials: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                step(&mut acc, t);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// Mean and binomial standard error √(p̂(1−p̂)/N) of an indicator evaluated
/// on trial keys `(seed, 0..trials)`.
pub fn mc_estimate<F>(trials: u64, seed: u64, indicator: F) -> Result<(f64, f64)>
where
    F: Fn(StreamKey) -> bool + Sync,
{
    if trials < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 trials, got {trials}")));
    }
    let hits = fold_trials(
        trials,
        || 0u64,
        |acc, t| *acc += u64::from(indicator(StreamKey::new(seed, t))),
        |acc, part| *acc += part,
    );
    Ok(binomial(hits, trials))
}

/// `(p̂, √(p̂(1−p̂)/N))`.
pub fn binomial(hits: u64, trials: u64) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Running sums for a sample mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, o: Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of observed counts (index = value) against `pmf`.
/// Cells are merged from the right until every expected count is at least 5;
/// the last cell absorbs the whole upper tail.
pub fn chi_square_gof(counts: &[u64], pmf: impl Fn(u32) -> f64) -> ChiSquare {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut cum = 0.0;
    let mut k = 0u32;
    loop {
        let expected = nf * pmf(k);
        let observed = counts.get(k as usize).copied().unwrap_or(0) as f64;
        cum += pmf(k);
        if (1.0 - cum) * nf < 5.0 {
            let rest: u64 = counts.iter().skip(k as usize).sum();
            cells.push((rest as f64, nf * (1.0 - (cum - pmf(k)))));
            break;
        }
        cells.push((observed, expected));
        k += 1;
    }
    while cells.len() > 1 && cells.last().unwrap().1 < 5.0 {
        let (o, e) = cells.pop().unwrap();
        let last = cells.last_mut().unwrap();
        last.0 += o;
        last.1 += e;
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    ChiSquare { statistic, dof, p_value }
}
