//! Shifting, classification and grid arithmetic on rectangles.
//!
//! Generic over the float type so the same rules serve the f64 pipeline and
//! f32 or extended-precision analysis code.

use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Good,
    Bad,
}

fn c<F: Float>(v: f64) -> F {
    F::from(v).expect("constant representable")
}

/// Height at or above which a job counts as heavily scheduled on a machine.
pub fn heavy_height<F: Float>() -> F {
    c::<F>(9.0) / c(100.0)
}

/// Right shift of a rectangle starting at `s` with length `p` for a job of
/// total height `x` on the machine: 0.34(s + x p) if x ≥ 9/100, else 0.34 s.
pub fn shift_amount<F: Float>(s: F, p: F, x: F) -> F {
    let k = c::<F>(0.34);
    if x >= heavy_height() {
        k * (s + x * p)
    } else {
        k * s
    }
}

pub fn shifted_start<F: Float>(s: F, p: F, x: F) -> F {
    s + shift_amount(s, p, x)
}

/// Good iff the rectangle starts at or after p/10 or the job has height ≥ 9/100.
pub fn classify<F: Float>(s: F, p: F, x: F) -> Class {
    if s >= p / c(10.0) || x >= heavy_height() {
        Class::Good
    } else {
        Class::Bad
    }
}

/// Grid interval `(ρ 10^k, ρ 10^{k+1}]` containing `theta`, returned as
/// `(k, ρ 10^k)`. Needs `theta > 0` and `rho ∈ (1/10, 1)`.
pub fn grid_interval<F: Float>(theta: F, rho: F) -> (i32, F) {
    let ten = c::<F>(10.0);
    let mut k = ((theta / rho).log10().ceil() - F::one()).to_i32().unwrap_or(0);
    let lower = |k: i32| rho * ten.powi(k);
    while lower(k) >= theta {
        k -= 1;
    }
    while lower(k + 1) < theta {
        k += 1;
    }
    (k, lower(k))
}

/// Length of the shifted rectangle `(ŝ, ŝ + p]` lying before `theta`.
pub fn shifted_prefix_length<F: Float>(s: F, p: F, x: F, theta: F) -> F {
    let hat = shifted_start(s, p, x);
    if theta >= hat + p {
        p
    } else if hat < theta {
        (theta - hat).min(p)
    } else {
        F::zero()
    }
}

/// Length of `(lo, hi] ∩ (a, b]`.
pub fn overlap<F: Float>(lo: F, hi: F, a: F, b: F) -> F {
    (hi.min(b) - lo.max(a)).max(F::zero())
}
