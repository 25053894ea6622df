use thiserror::Error;

use crate::instance::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    Syntax(serde_json::Error),

    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("horizon {horizon} is infeasible: job {job} needs at least {needed} time units")]
    InfeasibleHorizon { horizon: u64, job: usize, needed: u64 },

    #[error("linear program is infeasible (phase-1 residual {residual:e})")]
    LpInfeasible { residual: f64 },

    #[error("simplex internal error: {0}")]
    Solver(String),

    #[error("invalid fractional assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid grouping on machine {machine}: {reason}")]
    InvalidGrouping { machine: usize, reason: String },

    #[error("rate must lie in (0, 1], got {0}")]
    RateDomain(f64),

    #[error("rounding did not terminate: {remaining} jobs unassigned after {iterations} iterations")]
    Nontermination { remaining: usize, iterations: u32 },

    #[error("instance too large for exhaustive search ({machines}^{jobs} assignments)")]
    TooLarge { machines: usize, jobs: usize },

    #[error("machine {machine} is overloaded at time {time}: load {load}")]
    LoadViolation { machine: usize, time: u64, load: f64 },

    #[error("{0}")]
    Report(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Syntax(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
