//! Numerical checks of the quantities used in the approximation analysis.

use rand::Rng;

use super::stats::{fold_trials, Check, McEntry, McReport, Moments, SIGMA_K};
use crate::lp::RectangleSet;
use crate::rng::{unit_open_closed, Purpose, StreamKey};
use crate::sched::geometry::{grid_interval, shifted_prefix_length, shifted_start};
use crate::sched::sample_rho;

/// Panels used by [`mutual_delay_integral`] and [`self_delay`].
pub const SIMPSON_PANELS: usize = 10_000;

/// Composite Simpson rule on `[a, b]` with `panels` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// (1/p) ∫₀^p [L̂_s(ŝ* + τ) + L̂_{s*}(ŝ + τ)] dτ for two rectangles of the
/// same machine–job pair (length `p`, job height `x`) starting at `s_star`
/// and `s`.
pub fn mutual_delay_integral(s_star: f64, s: f64, p: f64, x: f64) -> f64 {
    let hat_star = shifted_start(s_star, p, x);
    let hat = shifted_start(s, p, x);
    let f = |tau: f64| shifted_prefix_length(s, p, x, hat_star + tau) + shifted_prefix_length(s_star, p, x, hat + tau);
    simpson(f, 0.0, p, SIMPSON_PANELS) / p
}

/// |mutual delay integral − p|.
pub fn mutual_delay_residual(s_star: f64, s: f64, p: f64, x: f64) -> f64 {
    (mutual_delay_integral(s_star, s, p, x) - p).abs()
}

/// (1/p) ∫₀^p L̂_s(ŝ + τ) dτ, which equals p/2.
pub fn self_delay(s: f64, p: f64, x: f64) -> f64 {
    let hat = shifted_start(s, p, x);
    simpson(|tau| shifted_prefix_length(s, p, x, hat + tau), 0.0, p, SIMPSON_PANELS) / p
}

/// Σ x_ijs · L̂_ijs(θ) over the rectangles of `machine`.
pub fn prefix_volume(set: &RectangleSet, machine: usize, theta: f64) -> f64 {
    set.on_machine(machine)
        .map(|(_, r)| {
            let x = set.height(machine, r.job);
            r.height * shifted_prefix_length(r.start as f64, r.len as f64, x, theta)
        })
        .sum()
}

/// Capacity law at `points` θ values per machine drawn uniformly from
/// (0, 1.5·(latest end)]: one entry per machine with the largest
/// `prefix_volume(θ) − θ`, which must be ≤ 1e−9.
pub fn capacity_law_check(set: &RectangleSet, points: u64, seed: u64) -> McReport {
    let mut report = McReport::new();
    let span = 1.5 * set.max_time().max(1) as f64;
    for i in 0..set.machines() {
        let mut rng = StreamKey::new(seed, i as u64).rng(Purpose::Oracle, 1);
        let worst = (0..points)
            .map(|_| {
                let theta = span * unit_open_closed(&mut rng);
                prefix_volume(set, i, theta) - theta
            })
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(McEntry::exact(format!("capacity/i{i}"), Check::AtMost, worst, 1e-9, points, seed));
    }
    report
}

/// Empirical P[θ ≤ θ* | representative starts at s] against L̂_s(θ*)/p for
/// each θ* in `thetas`.
pub fn event_law_check(s: u64, p: u64, x: f64, thetas: &[f64], trials: u64, seed: u64) -> McReport {
    let (sf, pf) = (s as f64, p as f64);
    let hat = shifted_start(sf, pf, x);
    let hits = fold_trials(
        trials,
        || vec![0u64; thetas.len()],
        |acc, t| {
            let theta = hat + pf * unit_open_closed(&mut StreamKey::new(seed, t).rng(Purpose::Oracle, 2));
            for (a, &star) in acc.iter_mut().zip(thetas) {
                *a += u64::from(theta <= star);
            }
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, b)| *a += b),
    );
    let mut report = McReport::new();
    for (k, (&h, &star)) in hits.iter().zip(thetas).enumerate() {
        let target = shifted_prefix_length(sf, pf, x, star) / pf;
        let est = h as f64 / trials as f64;
        let se = (target * (1.0 - target) / trials as f64).sqrt();
        report.push(McEntry::new(
            format!("event/s{s}/p{p}/t{k}"),
            Check::Equal,
            est,
            se,
            target,
            SIGMA_K,
            trials,
            seed,
        ));
    }
    report
}

/// For each θ: E[g] over `trials` draws of ρ against 0.55·θ (one-sided) and
/// the smallest g against 0.1·θ (strict, exact).
pub fn grid_start_check(thetas: &[f64], trials: u64, seed: u64) -> McReport {
    let mut report = McReport::new();
    for (k, &theta) in thetas.iter().enumerate() {
        let (moments, min_g) = fold_trials(
            trials,
            || (Moments::default(), f64::INFINITY),
            |acc, t| {
                let rho = sample_rho(&mut StreamKey::new(seed, t).rng(Purpose::Grid, 1 + k as u64));
                let (_, g) = grid_interval(theta, rho);
                acc.0.add(g);
                acc.1 = acc.1.min(g);
            },
            |acc, part| {
                acc.0.merge(part.0);
                acc.1 = acc.1.min(part.1);
            },
        );
        let id = format!("grid/theta{theta}");
        report.push(McEntry::new(
            format!("{id}/mean"),
            Check::AtMost,
            moments.mean(),
            moments.stderr(),
            0.55 * theta,
            SIGMA_K,
            trials,
            seed,
        ));
        let strict = min_g > 0.1 * theta;
        report.push(McEntry::exact(
            format!("{id}/min"),
            Check::AtLeast,
            if strict { min_g } else { f64::NEG_INFINITY },
            0.1 * theta,
            trials,
            seed,
        ));
    }
    report
}

/// Random rectangle pair `(s*, s, p, x)` of one machine–job pair.
pub fn random_rectangle_pair<R: Rng + ?Sized>(rng: &mut R) -> (u64, u64, u64, f64) {
    let p = rng.gen_range(1..=40);
    let s_star = rng.gen_range(0..=60);
    let s = if rng.gen_bool(0.5) {
        // near s*: shifted copies overlap
        s_star + rng.gen_range(1..=p)
    } else {
        match rng.gen_range(0..=200) {
            s if s == s_star => s + 1,
            s => s,
        }
    };
    let x = if rng.gen_bool(0.5) { rng.gen_range(0.001..0.09) } else { rng.gen_range(0.09..=1.0) };
    (s_star, s, p, x)
}

/// Mutual-delay residuals and self-delay deviations, each relative to p and
/// required below 1e−6, over `pairs` random rectangle pairs.
pub fn identity_checks(pairs: u64, seed: u64) -> McReport {
    let mut rng = StreamKey::new(seed, 0).rng(Purpose::Oracle, 5);
    let mut report = McReport::new();
    for k in 0..pairs {
        let (s_star, s, p, x) = random_rectangle_pair(&mut rng);
        let (sf, pf) = (s as f64, p as f64);
        let mutual = mutual_delay_residual(s_star as f64, sf, pf, x) / pf;
        report.push(McEntry::exact(format!("identity/mutual/{k}"), Check::AtMost, mutual, 1e-6, 1, seed));
        let own = (self_delay(s_star as f64, pf, x) - pf / 2.0).abs() / pf;
        report.push(McEntry::exact(format!("identity/self/{k}"), Check::AtMost, own, 1e-6, 1, seed));
    }
    report
}
