//! Poisson and "potential ticket" distributions.
//!
//! `TildePois(λ)` puts mass `e^{-λ} λ^{k-1} / k!` on every `k ≥ 1` (the
//! Poisson mass divided by λ) and the remainder on zero. Multiplying a draw by
//! an independent Bernoulli(λ) gives back Poisson(λ).
//!
//! Both samplers use inverse-CDF accumulation with a single uniform per draw
//! and stop once the remaining tail mass is below 1e-15.

use rand::Rng;

use crate::error::{Error, Result};

const TAIL_CUTOFF: f64 = 1e-15;

pub fn pois_pmf(lambda: f64, k: u32) -> f64 {
    let mut term = (-lambda).exp();
    for i in 1..=k {
        term *= lambda / f64::from(i);
    }
    term
}

pub fn tilde_pois_pmf(lambda: f64, k: u32) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::RateDomain(lambda));
    }
    Ok(if k == 0 { tilde_zero_mass(lambda) } else { pois_pmf(lambda, k) / lambda })
}

/// 1 − (1 − e^{−λ})/λ, written to avoid cancellation for small λ.
fn tilde_zero_mass(lambda: f64) -> f64 {
    (lambda + (-lambda).exp_m1()) / lambda
}

/// Inverts the CDF given the mass at zero and the ratio mass(k)/mass(k−1)
/// for k ≥ 2; `first` is the mass at one.
fn invert(u: f64, zero: f64, first: f64, lambda: f64) -> u32 {
    let mut cdf = zero;
    if u < cdf {
        return 0;
    }
    let mut k = 1u32;
    let mut mass = first;
    loop {
        cdf += mass;
        if u < cdf || 1.0 - cdf < TAIL_CUTOFF {
            return k;
        }
        k += 1;
        mass *= lambda / f64::from(k);
    }
}

/// Poisson(λ) draw; always consumes exactly one uniform.
pub fn sample_pois<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.gen();
    if lambda <= 0.0 {
        return 0;
    }
    let zero = (-lambda).exp();
    invert(u, zero, zero * lambda, lambda)
}

/// TildePois(λ) draw; always consumes exactly one uniform.
pub fn sample_tilde_pois<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u32> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::RateDomain(lambda));
    }
    let u: f64 = rng.gen();
    Ok(tilde_pois_quantile(lambda, u))
}

/// TildePois(λ) quantile at `u ∈ [0, 1)`; λ must lie in (0, 1].
pub(crate) fn tilde_pois_quantile(lambda: f64, u: f64) -> u32 {
    invert(u, tilde_zero_mass(lambda), (-lambda).exp(), lambda)
}
