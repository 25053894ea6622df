//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use fairround::contention::RoundingOptions;
use fairround::oracle::{
    analysis::{mutual_delay_residual, random_rectangle_pair, self_delay},
    brute_force_opt, capacity_law_check, decomposition_checks, distribution_checks, grid_start_check,
    rounding::{iteration_percentile_bound, percentile},
    suites::{bad_rich_rects, desk_suite, pairs_config, random_contention_config},
    tail_bound_check, verify_rounding_properties, McReport, GRID_THETAS,
};
use fairround::sched::{geometry::shifted_start, independent_round, prepare, round_once, MeanEstimate, Prepared};
use fairround::{Instance, Purpose, RectangleSet, StreamKey};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report_outcome(report: &McReport, prefix: &str) -> (usize, usize) {
    let rows: Vec<_> = report.with_prefix(prefix).collect();
    (rows.iter().filter(|e| !e.passed()).count(), rows.len())
}

fn failures_text(report: &McReport, prefix: &str) -> String {
    report
        .with_prefix(prefix)
        .filter(|e| !e.passed())
        .take(3)
        .map(|e| format!("{} est={:.6} bound={:.6} se={:.2e}", e.test_id, e.estimate, e.bound, e.stderr))
        .collect::<Vec<_>>()
        .join("; ")
}

struct Contention {
    configs: McReport,
    pairs: McReport,
    elapsed: Duration,
}

fn contention_suites() -> Contention {
    let start = Instant::now();
    let mut configs = McReport::new();
    let opts = RoundingOptions::default();
    for c in 0..10u64 {
        let (frac, groups) = random_contention_config(SEED + c);
        let r = verify_rounding_properties(&frac, &groups, 200_000, SEED + c, &opts).expect("valid configuration");
        configs.absorb(&format!("cfg{c}"), r);
    }
    let elapsed = start.elapsed();
    let (frac, groups) = pairs_config();
    let pairs = verify_rounding_properties(&frac, &groups, 1_000_000, SEED, &opts).expect("valid configuration");
    Contention { configs, pairs, elapsed }
}

fn criterion_1(c: &Contention) -> Outcome {
    let marg: Vec<_> = c.configs.entries.iter().filter(|e| e.test_id.contains("/marginal/")).collect();
    let failed = marg.iter().filter(|e| !e.passed()).count();
    Outcome {
        pass: failed == 0 && c.elapsed <= Duration::from_secs(120),
        detail: format!(
            "{} marginal rows over 10 configurations, {failed} outside 4σ; {:.1}s",
            marg.len(),
            c.elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2(c: &Contention) -> Outcome {
    let rows: Vec<_> =
        c.configs.entries.iter().chain(&c.pairs.entries).filter(|e| e.test_id.contains("decay/")).collect();
    let failed: Vec<_> = rows.iter().filter(|e| !e.passed()).collect();
    let first: Vec<f64> = rows.iter().filter(|e| e.test_id.ends_with("/l1")).map(|e| 1.0 - e.estimate).collect();
    let lo = first.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: failed.is_empty(),
        detail: format!(
            "{} per-job decay rows (ℓ = 1, 2, 3), {} outside 4σ; first-iteration rate in [{lo:.4}, {hi:.4}] vs {:.4}",
            rows.len(),
            failed.len(),
            1.0 - (-1.0f64).exp()
        ),
    }
}

fn criterion_3(c: &Contention) -> Outcome {
    let e = c.pairs.find("pair/grouped/i0/j0/j1").expect("grouped pair row");
    let product = 0.09 * 0.09;
    let below_product = e.estimate < product - 4.0 * e.stderr;
    Outcome {
        pass: e.passed() && below_product,
        detail: format!(
            "P̂[both]={:.6} (σ̂={:.1e}), strong bound {:.6}, product {product:.4}, N={}",
            e.estimate, e.stderr, e.bound, e.trials
        ),
    }
}

fn criterion_4(c: &Contention) -> Outcome {
    let rows: Vec<_> =
        c.configs.entries.iter().chain(&c.pairs.entries).filter(|e| e.test_id.contains("pair/ungrouped")).collect();
    let failed = rows.iter().filter(|e| !e.passed()).count();
    Outcome {
        pass: failed == 0 && !rows.is_empty(),
        detail: format!("{} ungrouped pair rows, {failed} above x·x′ + 4σ̂", rows.len()),
    }
}

fn criterion_5() -> Outcome {
    let (frac, groups) = pairs_config();
    let r = distribution_checks(&[0.09, 0.5, 1.0], &frac, &groups, 1_000_000, SEED).expect("distribution checks");
    let worst = r.entries.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
    let (bad, total) = report_outcome(&r, "chisq/");
    Outcome {
        pass: bad == 0,
        detail: format!("{total} chi-square fits, smallest p-value {worst:.4}; {}", failures_text(&r, "chisq/")),
    }
}

struct Desk {
    items: Vec<DeskItem>,
    elapsed: Duration,
}

struct DeskItem {
    name: String,
    instance: Instance,
    prep: Prepared,
    alg: MeanEstimate,
    baseline: MeanEstimate,
    opt: f64,
    max_iter: u32,
    p999: u32,
}

fn desk() -> Desk {
    let start = Instant::now();
    let opts = RoundingOptions::default();
    let items = desk_suite()
        .expect("suite generation")
        .into_iter()
        .map(|(name, instance)| {
            let prep = prepare(&instance, None).expect("LP solves");
            let runs: Vec<(f64, u32)> = (0..10_000u64)
                .into_par_iter()
                .map(|t| {
                    let run = round_once(&prep, StreamKey::new(SEED, t), &opts).expect("rounding succeeds");
                    (run.schedule.objective, run.assignment.iterations())
                })
                .collect();
            let base: Vec<f64> = (0..10_000u64)
                .into_par_iter()
                .map(|t| {
                    independent_round(&instance, &prep.rects, &mut StreamKey::new(SEED, t).rng(Purpose::Baseline, 0))
                        .objective
                })
                .collect();
            let objs: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let mut hist = std::collections::BTreeMap::new();
            for r in &runs {
                *hist.entry(r.1).or_insert(0u64) += 1;
            }
            let opt = brute_force_opt(&instance).expect("small instance").objective;
            DeskItem {
                name,
                alg: MeanEstimate::from_samples(&objs),
                baseline: MeanEstimate::from_samples(&base),
                max_iter: runs.iter().map(|r| r.1).max().unwrap_or(0),
                p999: percentile(&hist, 0.999),
                opt,
                instance,
                prep,
            }
        })
        .collect();
    Desk { items, elapsed: start.elapsed() }
}

fn criterion_6(d: &Desk) -> Outcome {
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    let mut worst_base: f64 = 0.0;
    for it in &d.items {
        let lp = it.prep.lp_objective;
        let ok_alg = it.alg.mean <= 1.488 * lp + 4.0 * it.alg.stderr;
        let ok_base = it.baseline.mean <= 1.5 * lp + 4.0 * it.baseline.stderr;
        let ok_opt = it.alg.mean <= 1.488 * it.opt + 4.0 * it.alg.stderr;
        worst = worst.max(it.alg.mean / lp);
        worst_base = worst_base.max(it.baseline.mean / lp);
        if !(ok_alg && ok_base && ok_opt) {
            failed.push(it.name.clone());
        }
    }
    Outcome {
        pass: failed.is_empty() && d.elapsed <= Duration::from_secs(900),
        detail: format!(
            "{} instances × 10⁴ runs; max alg/LP {worst:.4}, max baseline/LP {worst_base:.4}; failed {failed:?}; {:.1}s",
            d.items.len(),
            d.elapsed.as_secs_f64()
        ),
    }
}

fn criterion_7(d: &Desk) -> Outcome {
    let mut failed = Vec::new();
    let mut min_gap = f64::INFINITY;
    for it in &d.items {
        let lp = it.prep.lp_objective;
        min_gap = min_gap.min(it.opt / lp);
        if lp > it.opt * (1.0 + 1e-6) {
            failed.push(it.name.clone());
        }
    }
    Outcome { pass: failed.is_empty(), detail: format!("min OPT/LP {min_gap:.6}; violations {failed:?}") }
}

fn criterion_8() -> Outcome {
    let r = grid_start_check(&GRID_THETAS, 1_000_000, SEED);
    let ratios: Vec<String> = GRID_THETAS
        .iter()
        .map(|t| {
            let e = r.find(&format!("grid/theta{t}/mean")).expect("mean row");
            format!("{:.4}θ", e.estimate / t)
        })
        .collect();
    Outcome { pass: r.all_pass(), detail: format!("E[g] = {}; {}", ratios.join(", "), failures_text(&r, "grid/")) }
}

fn suite_rects(d: &Desk) -> Vec<(String, RectangleSet)> {
    let mut sets: Vec<(String, RectangleSet)> =
        d.items.iter().map(|it| (it.name.clone(), it.prep.rects.clone())).collect();
    for s in 0..5 {
        sets.push((format!("badrich{s}"), bad_rich_rects(SEED + s)));
    }
    sets
}

fn criterion_9(d: &Desk) -> Outcome {
    let mut report = McReport::new();
    for (name, set) in suite_rects(d) {
        report.absorb(&name, decomposition_checks(&set, 100, SEED).expect("loads within capacity"));
    }
    let (bad, total) = (report.failures().count(), report.entries.len());
    let worst =
        report.entries.iter().filter(|e| e.test_id.contains("/overlap/")).map(|e| e.estimate).fold(0.0, f64::max);
    Outcome {
        pass: bad == 0,
        detail: format!(
            "{total} rows, {bad} failed; largest bad-overlap sum {worst:.6}; {}",
            failures_text(&report, "")
        ),
    }
}

fn criterion_10(d: &Desk) -> Outcome {
    let mut rng = StreamKey::new(SEED, 0).rng(Purpose::Oracle, 99);
    let (mut worst, mut overlapping, mut disjoint) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let (s_star, s, p, x) = random_rectangle_pair(&mut rng);
        let (s_star, s, p) = (s_star as f64, s as f64, p as f64);
        let gap = (shifted_start(s, p, x) - shifted_start(s_star, p, x)).abs();
        if gap < p {
            overlapping += 1;
        } else {
            disjoint += 1;
        }
        worst = worst.max(mutual_delay_residual(s_star, s, p, x) / p);
        worst = worst.max((self_delay(s_star, p, x) - p / 2.0).abs() / p);
    }
    let mut cap = McReport::new();
    for (name, set) in suite_rects(d) {
        cap.absorb(&name, capacity_law_check(&set, 100, SEED));
    }
    let cap_bad = cap.failures().count();
    Outcome {
        pass: worst < 1e-6 && overlapping > 0 && disjoint > 0 && cap_bad == 0,
        detail: format!(
            "50 pairs ({overlapping} overlapping, {disjoint} disjoint), max residual/p {worst:.2e}; capacity law on {} machines, {cap_bad} violations",
            cap.entries.len()
        ),
    }
}

fn criterion_11() -> Outcome {
    let mut report = McReport::new();
    for s in 0..3 {
        report.absorb(&format!("badrich{s}"), tail_bound_check(&bad_rich_rects(SEED + s), 10_000, SEED + s));
    }
    let tails: Vec<_> = report.entries.iter().filter(|e| e.test_id.contains("/tail/")).collect();
    let heights: Vec<_> = report.entries.iter().filter(|e| e.test_id.contains("/height/")).collect();
    let min_tail = tails.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
    let max_height = heights.iter().map(|e| e.estimate).fold(0.0, f64::max);
    let bad = tails.iter().filter(|e| !e.passed()).count();
    let bad_h = heights.iter().filter(|e| !e.passed()).count();
    Outcome {
        pass: bad == 0 && !tails.is_empty(),
        detail: format!(
            "{} (machine, job) rows, min P̂[height ≤ 0.82] {min_tail:.4} vs 0.5317, {bad} failed; interval heights max {max_height:.4} vs 0.5 ({bad_h} failed)",
            tails.len()
        ),
    }
}

fn criterion_12(c: &Contention, d: &Desk) -> Outcome {
    let rows: Vec<_> =
        c.configs.entries.iter().chain(&c.pairs.entries).filter(|e| e.test_id.contains("termination/")).collect();
    let mut failed: Vec<String> = rows.iter().filter(|e| !e.passed()).map(|e| e.test_id.clone()).collect();
    let mut max_seen = rows.iter().filter(|e| e.test_id.ends_with("max")).map(|e| e.estimate as u32).max().unwrap_or(0);
    for it in &d.items {
        let n = it.instance.jobs();
        max_seen = max_seen.max(it.max_iter);
        if it.max_iter > fairround::contention::default_max_iters(n) || it.p999 > iteration_percentile_bound(n) {
            failed.push(it.name.clone());
        }
    }
    Outcome { pass: failed.is_empty(), detail: format!("largest iteration count {max_seen}; failures {failed:?}") }
}

fn main() {
    if let Ok(threads) = std::env::var("FAIRROUND_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let contention = contention_suites();
    let desk = desk();
    let results = [
        ("marginal preservation", criterion_1(&contention)),
        ("per-iteration assignment rate", criterion_2(&contention)),
        ("strong negative correlation", criterion_3(&contention)),
        ("negative correlation", criterion_4(&contention)),
        ("distribution laws", criterion_5()),
        ("end-to-end ratio", criterion_6(&desk)),
        ("LP soundness", criterion_7(&desk)),
        ("grid-start bound", criterion_8()),
        ("configuration decomposition", criterion_9(&desk)),
        ("analysis identities", criterion_10(&desk)),
        ("tail bound", criterion_11()),
        ("termination", criterion_12(&contention, &desk)),
    ];
    let mut all = true;
    for (k, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!(
            "criterion {:>2} {:<31} {}  {}",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail.trim_end_matches("; ")
        );
    }
    if !all {
        std::process::exit(1);
    }
}
