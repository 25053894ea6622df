//! Scalar abstraction shared by the simplex and the time-indexed model.
//!
//! Floating types carry explicit zero tolerances; exact rationals use zero
//! tolerance so the same pivoting code runs unchanged over both.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar: Num + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {
    /// Reduced costs above `-cost_tol()` count as nonnegative.
    fn cost_tol() -> Self;
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;
    /// Phase-1 residual above which the program is declared infeasible.
    fn feasibility_tol() -> Self;
    /// Values closer than this to zero are flushed after solving.
    fn flush_tol() -> Self;

    fn from_count(v: u64) -> Self {
        <Self as FromPrimitive>::from_u64(v).expect("u64 converts to every scalar")
    }

    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn cost_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-11
    }
    fn feasibility_tol() -> Self {
        1e-7
    }
    fn flush_tol() -> Self {
        1e-12
    }
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    fn cost_tol() -> Self {
        1e-5
    }
    fn pivot_tol() -> Self {
        1e-6
    }
    fn feasibility_tol() -> Self {
        1e-4
    }
    fn flush_tol() -> Self {
        1e-6
    }
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for BigRational {
    fn cost_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn pivot_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn feasibility_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn flush_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    /// Exact binary expansion of the double.
    fn from_f64_lossy(v: f64) -> Self {
        BigRational::from_float(v).expect("finite weight")
    }
}
