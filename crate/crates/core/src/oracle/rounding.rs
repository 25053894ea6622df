//! Monte Carlo certification of the contention resolution guarantees and of
//! the grouping statistics of the scheduling rounding.

use std::collections::BTreeMap;

use rand::Rng;

use super::stats::{binomial, chi_square_gof, fold_trials, Check, ChiSquare, McEntry, McReport, Moments, SIGMA_K};
use crate::contention::{
    pois_pmf, run_round_iteration, sample_pois, sample_tilde_pois, tilde_pois_pmf, FracAssignment, Grouping, Resolver,
    RoundingOptions,
};
use crate::error::{Error, Result};
use crate::lp::RectangleSet;
use crate::rng::{Purpose, StreamKey};
use crate::sched::draw_grouping;

/// Smallest trial count accepted by the statistical suites.
pub const TRIALS_FLOOR: u64 = 10_000;

/// Height threshold of the tail-bound statement.
pub const TAIL_HEIGHT: f64 = 0.82;
/// Lower bound on P[associated height ≤ 0.82].
pub const TAIL_PROB: f64 = 0.5317;

/// Strong negative correlation coefficient (e^x + e^x′)/(1 + e).
pub fn grouped_pair_factor(x: f64, x2: f64) -> f64 {
    (x.exp() + x2.exp()) / (1.0 + std::f64::consts::E)
}

/// ⌈3 ln n⌉ + 5.
pub fn iteration_percentile_bound(jobs: usize) -> u32 {
    (3.0 * (jobs.max(1) as f64).ln()).ceil() as u32 + 5
}

#[derive(Debug, Clone)]
struct Counts {
    /// Times job `j` landed on machine `i`, row-major.
    marginal: Vec<u64>,
    /// Times both `j < j′` landed on machine `i`, indexed `(i·n + j)·n + j′`.
    pair: Vec<u64>,
    /// `late[j·L + ℓ−1]`: job `j` still unassigned after ℓ iterations.
    late: Vec<u64>,
    /// Histogram of iterations per resolve call.
    iterations: BTreeMap<u32, u64>,
}

const DECAY_LEVELS: usize = 3;

/// Runs `resolve` `trials` times (trial `t` keyed `(seed, t)`) and reports:
/// marginals (two-sided), pair bounds for every unordered pair with positive
/// heights on every machine (one-sided; grouped pairs against the strong
/// bound), per-job decay P[unassigned after ℓ] = e^{−ℓ} for ℓ = 1, 2, 3
/// (two-sided), the largest iteration count against the cap, and, for two or
/// more jobs, the 99.9th iteration percentile against ⌈3 ln n⌉ + 5.
pub fn verify_rounding_properties(
    frac: &FracAssignment,
    groups: &Grouping,
    trials: u64,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<McReport> {
    if trials < TRIALS_FLOOR {
        return Err(Error::InvalidParams(format!("trials below statistical floor ({trials} < {TRIALS_FLOOR})")));
    }
    let (m, n) = (frac.machines(), frac.jobs());
    let resolver = Resolver::new(frac, groups, *opts)?;
    let counts = fold_trials(
        trials,
        || {
            Ok(Counts {
                marginal: vec![0; m * n],
                pair: vec![0; m * n * n],
                late: vec![0; n * DECAY_LEVELS],
                iterations: BTreeMap::new(),
            })
        },
        |acc: &mut Result<Counts>, t| {
            let Ok(c) = acc else { return };
            match resolver.resolve(StreamKey::new(seed, t)) {
                Ok(a) => {
                    for j in 0..n {
                        let i = a.machine[j];
                        c.marginal[i * n + j] += 1;
                        for j2 in j + 1..n {
                            if a.machine[j2] == i {
                                c.pair[(i * n + j) * n + j2] += 1;
                            }
                        }
                        for l in 0..DECAY_LEVELS {
                            c.late[j * DECAY_LEVELS + l] += u64::from(a.iteration[j] > l as u32 + 1);
                        }
                    }
                    *c.iterations.entry(a.iterations()).or_default() += 1;
                }
                Err(e) => *acc = Err(e),
            }
        },
        |acc, part| match (acc, part) {
            (Ok(a), Ok(b)) => {
                a.marginal.iter_mut().zip(b.marginal).for_each(|(x, y)| *x += y);
                a.pair.iter_mut().zip(b.pair).for_each(|(x, y)| *x += y);
                a.late.iter_mut().zip(b.late).for_each(|(x, y)| *x += y);
                for (k, v) in b.iterations {
                    *a.iterations.entry(k).or_default() += v;
                }
            }
            (acc @ Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )?;

    let nf = trials as f64;
    let mut report = McReport::new();
    for i in 0..m {
        for j in 0..n {
            let x = frac.get(i, j);
            let est = counts.marginal[i * n + j] as f64 / nf;
            let se = (x * (1.0 - x) / nf).sqrt();
            report.push(McEntry::new(format!("marginal/i{i}/j{j}"), Check::Equal, est, se, x, SIGMA_K, trials, seed));
        }
        for j in 0..n {
            for j2 in j + 1..n {
                let (x, x2) = (frac.get(i, j), frac.get(i, j2));
                if x <= 0.0 || x2 <= 0.0 {
                    continue;
                }
                let (est, se) = binomial(counts.pair[(i * n + j) * n + j2], trials);
                let (kind, bound) = if groups.together(i, j, j2) {
                    ("grouped", grouped_pair_factor(x, x2) * x * x2)
                } else {
                    ("ungrouped", x * x2)
                };
                report.push(McEntry::new(
                    format!("pair/{kind}/i{i}/j{j}/j{j2}"),
                    Check::AtMost,
                    est,
                    se,
                    bound,
                    SIGMA_K,
                    trials,
                    seed,
                ));
            }
        }
    }
    for j in 0..n {
        for l in 0..DECAY_LEVELS {
            let target = (-(l as f64 + 1.0)).exp();
            let est = counts.late[j * DECAY_LEVELS + l] as f64 / nf;
            let se = (target * (1.0 - target) / nf).sqrt();
            report.push(McEntry::new(
                format!("decay/j{j}/l{}", l + 1),
                Check::Equal,
                est,
                se,
                target,
                SIGMA_K,
                trials,
                seed,
            ));
        }
    }
    let max_iter = counts.iterations.keys().copied().max().unwrap_or(0);
    let cap = opts.max_iters.unwrap_or_else(|| crate::contention::default_max_iters(n));
    report.push(McEntry::exact("termination/max", Check::AtMost, f64::from(max_iter), f64::from(cap), trials, seed));
    if n >= 2 {
        report.push(McEntry::exact(
            "termination/p999",
            Check::AtMost,
            f64::from(percentile(&counts.iterations, 0.999)),
            f64::from(iteration_percentile_bound(n)),
            trials,
            seed,
        ));
    }
    Ok(report)
}

/// Smallest value `v` with at least a `q` fraction of the histogram ≤ `v`.
pub fn percentile(hist: &BTreeMap<u32, u64>, q: f64) -> u32 {
    let total: u64 = hist.values().sum();
    let need = (q * total as f64).ceil() as u64;
    let mut cum = 0;
    for (&v, &c) in hist {
        cum += c;
        if cum >= need {
            return v;
        }
    }
    0
}

/// Grouping statistics of the scheduling rounding on a rectangle set, over
/// draws of representatives, τ, ρ and coins (trial `t` keyed `(seed, t)`):
///
/// * `tail/i/j`: for every pair `(i, j*)` with positive height, the
///   probability that the jobs other than `j*` associated with the interval
///   containing θ_ij* have total height ≤ 0.82, against 0.5317 (one-sided);
/// * `height/i/k`: for every machine and interval index, the expected total
///   height associated with the interval (zero when empty), against 1/2.
pub fn tail_bound_check(set: &RectangleSet, trials: u64, seed: u64) -> McReport {
    let (m, n) = (set.machines(), set.jobs());
    type Acc = (Vec<u64>, BTreeMap<(usize, i32), Moments>);
    let (low, heights): Acc = fold_trials(
        trials,
        || (vec![0u64; m * n], BTreeMap::new()),
        |acc: &mut Acc, t| {
            let (reps, grid, out) = draw_grouping(set, StreamKey::new(seed, t));
            let mut by_interval: BTreeMap<(usize, i32), (f64, Vec<usize>)> = BTreeMap::new();
            for a in &out.associations {
                by_interval.insert((a.machine, a.k), (a.height, a.jobs.clone()));
            }
            for rep in reps.iter() {
                let (k, _) = grid.interval(rep.theta);
                let others = by_interval.get(&(rep.machine, k)).map_or(0.0, |(_, jobs)| {
                    jobs.iter().filter(|&&j| j != rep.job).map(|&j| set.height(rep.machine, j)).sum()
                });
                acc.0[rep.machine * n + rep.job] += u64::from(others <= TAIL_HEIGHT);
            }
            for (&key, (h, _)) in &by_interval {
                acc.1.entry(key).or_default().add(*h);
            }
        },
        |acc, part| {
            acc.0.iter_mut().zip(part.0).for_each(|(a, b)| *a += b);
            for (k, v) in part.1 {
                acc.1.entry(k).or_default().merge(v);
            }
        },
    );
    let mut report = McReport::new();
    for i in 0..m {
        for j in 0..n {
            if set.height(i, j) <= 0.0 {
                continue;
            }
            let (est, se) = binomial(low[i * n + j], trials);
            report.push(McEntry::new(
                format!("tail/i{i}/j{j}"),
                Check::AtLeast,
                est,
                se,
                TAIL_PROB,
                SIGMA_K,
                trials,
                seed,
            ));
        }
    }
    for ((i, k), mut mo) in heights {
        // trials in which the interval was empty contribute zero
        mo.n = trials;
        report.push(McEntry::new(
            format!("height/i{i}/k{k}"),
            Check::AtMost,
            mo.mean(),
            mo.stderr(),
            0.5,
            SIGMA_K,
            trials,
            seed,
        ));
    }
    report
}

fn sample_counts(
    draws: u64,
    seed: u64,
    draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<u32> + Sync,
) -> Result<Vec<u64>> {
    fold_trials(
        draws.div_ceil(4096),
        || Ok(Vec::new()),
        |acc: &mut Result<Vec<u64>>, block| {
            let Ok(counts) = acc else { return };
            let mut rng = StreamKey::new(seed, block).rng(Purpose::Oracle, 3);
            for _ in 0..4096.min(draws - block * 4096) {
                match draw(&mut rng) {
                    Ok(k) => {
                        let k = k as usize;
                        if counts.len() <= k {
                            counts.resize(k + 1, 0);
                        }
                        counts[k] += 1;
                    }
                    Err(e) => {
                        *acc = Err(e);
                        return;
                    }
                }
            }
        },
        |acc, part| match (acc, part) {
            (Ok(a), Ok(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), 0);
                }
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (acc @ Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )
}

fn chi_entry(id: String, chi: ChiSquare, draws: u64, seed: u64) -> McEntry {
    McEntry::exact(id, Check::AtLeast, chi.p_value, 0.001, draws, seed)
}

/// Chi-square fits (p-value > 0.001) of: Poisson and potential-ticket draws
/// at each rate in `rates`, the product of a Bernoulli(λ) and a potential
/// ticket draw against Poisson(λ), and the real ticket total of every job in
/// one iteration on `frac` against Poisson(1).
pub fn distribution_checks(
    rates: &[f64],
    frac: &FracAssignment,
    groups: &Grouping,
    draws: u64,
    seed: u64,
) -> Result<McReport> {
    let mut report = McReport::new();
    for (r, &lambda) in rates.iter().enumerate() {
        let s = seed.wrapping_add(r as u64 * 4);
        let pois = sample_counts(draws, s, |rng| Ok(sample_pois(lambda, rng)))?;
        report.push(chi_entry(
            format!("chisq/pois/{lambda}"),
            chi_square_gof(&pois, |k| pois_pmf(lambda, k)),
            draws,
            s,
        ));
        let s = s + 1;
        let tilde = sample_counts(draws, s, |rng| sample_tilde_pois(lambda, rng))?;
        let chi = chi_square_gof(&tilde, |k| tilde_pois_pmf(lambda, k).unwrap_or(0.0));
        report.push(chi_entry(format!("chisq/tilde/{lambda}"), chi, draws, s));
        let s = s + 1;
        let product = sample_counts(draws, s, |rng| {
            let b = rng.gen::<f64>() < lambda;
            Ok(u32::from(b) * sample_tilde_pois(lambda, rng)?)
        })?;
        report.push(chi_entry(
            format!("chisq/product/{lambda}"),
            chi_square_gof(&product, |k| pois_pmf(lambda, k)),
            draws,
            s,
        ));
    }
    let s = seed.wrapping_add(rates.len() as u64 * 4);
    groups.validate(frac)?;
    let n = frac.jobs();
    let opts = RoundingOptions { diagnostics: true, ..Default::default() };
    let active = vec![true; n];
    let totals = fold_trials(
        draws,
        || Ok(vec![Vec::<u64>::new(); n]),
        |acc: &mut Result<Vec<Vec<u64>>>, t| {
            let Ok(per_job) = acc else { return };
            let mut rng = StreamKey::new(s, t).rng(Purpose::Oracle, 4);
            match run_round_iteration(frac, groups, &active, &mut rng, &opts) {
                Ok(out) => {
                    let d = out.diagnostics.expect("diagnostics requested");
                    for (j, counts) in per_job.iter_mut().enumerate() {
                        let k = (0..frac.machines()).map(|i| d.real[i * n + j]).sum::<u32>() as usize;
                        if counts.len() <= k {
                            counts.resize(k + 1, 0);
                        }
                        counts[k] += 1;
                    }
                }
                Err(e) => *acc = Err(e),
            }
        },
        |acc, part| match (acc, part) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    if x.len() < y.len() {
                        x.resize(y.len(), 0);
                    }
                    x.iter_mut().zip(y).for_each(|(u, v)| *u += v);
                }
            }
            (acc @ Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )?;
    for (j, counts) in totals.iter().enumerate() {
        report.push(chi_entry(format!("chisq/tickets/j{j}"), chi_square_gof(counts, |k| pois_pmf(1.0, k)), draws, s));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_constant() {
        let eta = grouped_pair_factor(0.09, 0.09);
        assert!((eta - 2.0 * 0.09f64.exp() / (std::f64::consts::E + 1.0)).abs() < 1e-15);
        assert!(eta < 0.589);
    }

    #[test]
    fn percentile_of_histogram() {
        let h: BTreeMap<u32, u64> = [(1, 900), (2, 99), (5, 1)].into_iter().collect();
        assert_eq!(percentile(&h, 0.9), 1);
        assert_eq!(percentile(&h, 0.999), 2);
        assert_eq!(percentile(&h, 1.0), 5);
    }

    #[test]
    fn floor_enforced() {
        let frac = FracAssignment::new(vec![vec![1.0]]).unwrap();
        let r = verify_rounding_properties(&frac, &Grouping::singletons(1), 10, 0, &RoundingOptions::default());
        assert!(matches!(r, Err(Error::InvalidParams(msg)) if msg.contains("statistical floor")));
    }

    #[test]
    fn two_machine_single_job() {
        let frac = FracAssignment::new(vec![vec![0.5], vec![0.5]]).unwrap();
        let r = verify_rounding_properties(&frac, &Grouping::singletons(2), 20_000, 1, &RoundingOptions::default())
            .unwrap();
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.with_prefix("marginal/").count(), 2);
        assert_eq!(r.with_prefix("pair/").count(), 0);
        assert!(r.find("termination/p999").is_none());
    }

    #[test]
    fn singleton_grouping_has_no_grouped_rows() {
        let frac = FracAssignment::new(vec![vec![0.3, 0.6, 0.5], vec![0.7, 0.4, 0.5]]).unwrap();
        let r = verify_rounding_properties(&frac, &Grouping::singletons(2), 20_000, 2, &RoundingOptions::default())
            .unwrap();
        assert_eq!(r.with_prefix("pair/grouped").count(), 0);
        assert_eq!(r.with_prefix("pair/ungrouped").count(), 6);
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn tail_check_without_bad_jobs_is_vacuous_for_heights() {
        use crate::lp::Rectangle;
        let set = RectangleSet::new(1, 1, vec![Rectangle { machine: 0, job: 0, start: 0, len: 3, height: 1.0 }]);
        let r = tail_bound_check(&set, 1000, 3);
        assert_eq!(r.with_prefix("height/").count(), 0);
        assert!(r.all_pass());
    }

    #[test]
    fn distribution_laws_small() {
        let frac = FracAssignment::new(vec![vec![0.3, 0.09], vec![0.7, 0.91]]).unwrap();
        let groups = Grouping::new(vec![vec![vec![0, 1]], vec![]]);
        let r = distribution_checks(&[0.5], &frac, &groups, 50_000, 4).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
    }
}
