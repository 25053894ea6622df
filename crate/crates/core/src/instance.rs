//! Scheduling instances: data model, validation, generation and the JSON
//! file format.
//!
//! Processing times are positive integers, or absent when a job cannot run
//! on a machine. Weights are positive doubles. Indices are zero-based in
//! code and in files; human-readable messages number jobs and machines from 1.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamKey};

/// Raw instance content, exactly as it appears in an instance file.
///
/// `p[i][j]` is the processing time of job `j` on machine `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceData {
    pub machines: usize,
    pub jobs: usize,
    pub p: Vec<Vec<Option<f64>>>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoMachines,
    NoJobs,
    RowCount { expected: usize, found: usize },
    RowLength { machine: usize, expected: usize, found: usize },
    WeightCount { expected: usize, found: usize },
    TimeBelowOne { machine: usize, job: usize },
    TimeNotIntegral { machine: usize, job: usize },
    NoEligibleMachine { job: usize },
    NonPositiveWeight { job: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NoMachines => write!(f, "machine count must be positive"),
            Violation::NoJobs => write!(f, "job count must be positive"),
            Violation::RowCount { expected, found } => {
                write!(f, "p has {found} machine rows, expected {expected}")
            }
            Violation::RowLength { machine, expected, found } => {
                write!(f, "p row of machine {} has {found} entries, expected {expected}", machine + 1)
            }
            Violation::WeightCount { expected, found } => {
                write!(f, "w has {found} entries, expected {expected}")
            }
            Violation::TimeBelowOne { machine, job } => {
                write!(f, "p_ij must be ≥ 1 (machine {}, job {})", machine + 1, job + 1)
            }
            Violation::TimeNotIntegral { machine, job } => {
                write!(f, "p_ij must be an integer (machine {}, job {})", machine + 1, job + 1)
            }
            Violation::NoEligibleMachine { job } => {
                write!(f, "job {} has no eligible machine", job + 1)
            }
            Violation::NonPositiveWeight { job } => {
                write!(f, "weight of job {} must be positive", job + 1)
            }
        }
    }
}

/// Every violated instance constraint; empty iff the data is a valid instance.
pub fn validate(data: &InstanceData) -> Vec<Violation> {
    let mut out = Vec::new();
    if data.machines == 0 {
        out.push(Violation::NoMachines);
    }
    if data.jobs == 0 {
        out.push(Violation::NoJobs);
    }
    if data.p.len() != data.machines {
        out.push(Violation::RowCount { expected: data.machines, found: data.p.len() });
    }
    for (i, row) in data.p.iter().enumerate() {
        if row.len() != data.jobs {
            out.push(Violation::RowLength { machine: i, expected: data.jobs, found: row.len() });
        }
        for (j, entry) in row.iter().enumerate() {
            if let Some(v) = *entry {
                if !(v >= 1.0) {
                    out.push(Violation::TimeBelowOne { machine: i, job: j });
                } else if v.fract() != 0.0 || v > 9.007_199_254_740_992e15 {
                    out.push(Violation::TimeNotIntegral { machine: i, job: j });
                }
            }
        }
    }
    if data.w.len() != data.jobs {
        out.push(Violation::WeightCount { expected: data.jobs, found: data.w.len() });
    }
    for j in 0..data.jobs {
        let eligible = data.p.iter().any(|row| matches!(row.get(j), Some(Some(v)) if *v >= 1.0));
        if !eligible {
            out.push(Violation::NoEligibleMachine { job: j });
        }
    }
    for (j, &w) in data.w.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            out.push(Violation::NonPositiveWeight { job: j });
        }
    }
    out
}

/// A validated scheduling instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    p: Vec<Vec<Option<u64>>>,
    w: Vec<f64>,
}

impl Instance {
    /// Builds an instance from `p[machine][job]` and per-job weights.
    pub fn new(p: Vec<Vec<Option<u64>>>, w: Vec<f64>) -> Result<Self> {
        let data = InstanceData {
            machines: p.len(),
            jobs: w.len(),
            p: p.iter().map(|row| row.iter().map(|v| v.map(|x| x as f64)).collect()).collect(),
            w,
        };
        Self::from_data(&data)
    }

    pub fn from_data(data: &InstanceData) -> Result<Self> {
        let violations = validate(data);
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let p = data.p.iter().map(|row| row.iter().map(|v| v.map(|x| x as u64)).collect()).collect();
        Ok(Self { p, w: data.w.clone() })
    }

    pub fn to_data(&self) -> InstanceData {
        InstanceData {
            machines: self.machines(),
            jobs: self.jobs(),
            p: self.p.iter().map(|row| row.iter().map(|v| v.map(|x| x as f64)).collect()).collect(),
            w: self.w.clone(),
        }
    }

    pub fn machines(&self) -> usize {
        self.p.len()
    }

    pub fn jobs(&self) -> usize {
        self.w.len()
    }

    /// Processing time of `job` on `machine`, `None` when the job cannot run there.
    pub fn p(&self, machine: usize, job: usize) -> Option<u64> {
        self.p[machine][job]
    }

    pub fn weight(&self, job: usize) -> f64 {
        self.w[job]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Machines on which `job` can run.
    pub fn eligible(&self, job: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        (0..self.machines()).filter_map(move |i| self.p[i][job].map(|p| (i, p)))
    }

    /// The same instance with jobs reordered: job `k` of the result is job
    /// `order[k]` of `self`.
    pub fn permute_jobs(&self, order: &[usize]) -> Instance {
        let p = self.p.iter().map(|row| order.iter().map(|&j| row[j]).collect()).collect();
        let w = order.iter().map(|&j| self.w[j]).collect();
        Instance { p, w }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let data: InstanceData = serde_json::from_str(text)?;
    Instance::from_data(&data)
}

/// Canonical JSON form. Integral times are written without a fractional part.
pub fn serialize_instance(inst: &Instance) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        machines: usize,
        jobs: usize,
        p: &'a [Vec<Option<u64>>],
        w: &'a [f64],
    }
    let out = Out { machines: inst.machines(), jobs: inst.jobs(), p: &inst.p, w: &inst.w };
    serde_json::to_string_pretty(&out).expect("instance serializes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub machine_count: usize,
    pub job_count: usize,
    pub p_min: u64,
    pub p_max: u64,
    pub w_min: f64,
    pub w_max: f64,
    pub absent_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { machine_count: 3, job_count: 6, p_min: 1, p_max: 5, w_min: 1.0, w_max: 10.0, absent_prob: 0.0 }
    }
}

impl GenParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.machine_count == 0 || self.job_count == 0 {
            return bad("machine and job counts must be positive");
        }
        if self.p_min == 0 || self.p_min > self.p_max {
            return bad("need 1 ≤ pmin ≤ pmax");
        }
        if !(self.w_min > 0.0 && self.w_min <= self.w_max && self.w_max.is_finite()) {
            return bad("need 0 < wmin ≤ wmax");
        }
        if !(0.0..1.0).contains(&self.absent_prob) {
            return bad("absent probability must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Deterministic random instance. A job whose draws left it with no machine
/// has its processing times redrawn.
pub fn generate_random(params: &GenParams, seed: u64) -> Result<Instance> {
    params.check()?;
    let mut rng = StreamKey::new(seed, 0).rng(Purpose::Generator, 0);
    let (m, n) = (params.machine_count, params.job_count);
    let mut p = vec![vec![None; n]; m];
    let mut w = Vec::with_capacity(n);
    for j in 0..n {
        loop {
            let mut any = false;
            for row in p.iter_mut() {
                let absent = params.absent_prob > 0.0 && rng.gen::<f64>() < params.absent_prob;
                row[j] = if absent {
                    None
                } else {
                    any = true;
                    Some(rng.gen_range(params.p_min..=params.p_max))
                };
            }
            if any {
                break;
            }
        }
        let weight = if params.w_min == params.w_max {
            params.w_min
        } else {
            // Three decimals keep files short and exactly round-trippable.
            let raw = rng.gen_range(params.w_min..=params.w_max);
            ((raw * 1000.0).round() / 1000.0).clamp(params.w_min, params.w_max)
        };
        w.push(weight);
    }
    Instance::new(p, w)
}
