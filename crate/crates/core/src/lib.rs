//! Iterative fair contention resolution and randomized rounding of the
//! time-indexed LP for scheduling weighted jobs on unrelated machines.
//!
//! The pipeline is [`sched::prepare`] (build and solve the LP), then
//! [`sched::round_once`] per run. [`contention`] can be used on its own for
//! any fractional assignment with grouping constraints.

pub mod contention;
pub mod error;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod sched;

pub use contention::{Assignment, FracAssignment, Grouping, Resolver, RoundingOptions};
pub use error::{Error, Result};
pub use instance::{generate_random, parse_instance, serialize_instance, GenParams, Instance};
pub use lp::{build_lp, solve_lp, LpProblem, LpSolution, RectangleSet};
pub use rng::{Purpose, StreamKey};
pub use scalar::Scalar;
pub use sched::{approx_solve, prepare, round_once, Prepared, Schedule};

pub type Real = f64;
pub type Exact = num_rational::BigRational;

pub type LpProblemF64 = LpProblem<f64>;
pub type LpProblemF32 = LpProblem<f32>;
pub type ExactLpProblem = LpProblem<Exact>;
pub type LpSolutionF64 = LpSolution<f64>;
pub type ExactLpSolution = LpSolution<Exact>;

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
