use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use fairround::contention::RoundingOptions;
use fairround::oracle::{
    capacity_law_check, decomposition_checks, grid_start_check, identity_checks,
    suites::{bad_rich_rects, pairs_config},
    tail_bound_check, verify_rounding_properties, McReport, GRID_THETAS, TRIALS_FLOOR,
};
use fairround::sched::{draw_grouping, round_once, sample_objectives, MeanEstimate, Method, Prepared};
use fairround::{generate_random, parse_instance, prepare, serialize_instance, Error, GenParams, Instance};
use fairround::{StreamKey, VERSION};

use crate::{BenchArgs, GenArgs, SolveArgs, VerifyArgs};

pub const EXIT_STATISTICAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, error: anyhow!(msg.into()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InfeasibleHorizon { .. }
            | Error::LpInfeasible { .. }
            | Error::Solver(_)
            | Error::Nontermination { .. }
            | Error::LoadViolation { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Self { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: EXIT_USAGE, error }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn provenance(seed: u64, trials: u64) -> String {
    format!("fairround {VERSION} seed={seed} trials={trials}")
}

fn write_out(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).map_err(|e| Failure::from(e).context(path))
}

impl Failure {
    fn context(self, path: &Path) -> Self {
        Self { code: self.code, error: self.error.context(path.display().to_string()) }
    }
}

pub fn gen(a: GenArgs) -> Outcome {
    let params = GenParams {
        machine_count: a.machines,
        job_count: a.jobs,
        p_min: a.pmin,
        p_max: a.pmax,
        w_min: a.wmin,
        w_max: a.wmax,
        absent_prob: a.absent,
    };
    let inst = generate_random(&params, a.seed)?;
    let mut text = serialize_instance(&inst);
    text.push('\n');
    let path = a.out.unwrap_or_else(|| PathBuf::from(format!("instance-{}.json", a.seed)));
    write_out(&path, text.as_bytes())?;
    println!("{}", path.display());
    println!("sha256 {}", hex::encode(Sha256::digest(text.as_bytes())));
    println!("seed {}", a.seed);
    Ok(ExitCode::SUCCESS)
}

/// One row of the ratio report.
struct RatioRow {
    instance_id: String,
    lp_obj: f64,
    alg: MeanEstimate,
    baseline: Option<MeanEstimate>,
}

const RATIO_HEADER: &str = "instance_id,lp_obj,alg_mean,alg_ci95,baseline_mean,baseline_ci95,trials";

impl RatioRow {
    fn csv(&self) -> String {
        let (bm, bc) = match &self.baseline {
            Some(b) => (b.mean.to_string(), b.ci95().to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{bm},{bc},{}",
            self.instance_id,
            self.lp_obj,
            self.alg.mean,
            self.alg.ci95(),
            self.alg.trials
        )
    }
}

struct Solved {
    row: RatioRow,
    best_trial: u64,
    best: fairround::Schedule,
}

fn run_instance(id: String, prep: &Prepared, seed: u64, trials: u64, baseline: bool) -> Result<Solved, Failure> {
    let objs = sample_objectives(prep, Method::Contention, seed, trials)?;
    let best_trial =
        objs.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0))).map_or(0, |(t, _)| t as u64);
    let best = round_once(prep, StreamKey::new(seed, best_trial), &RoundingOptions::default())?.schedule;
    let baseline = if baseline {
        let base = sample_objectives(prep, Method::Independent, seed, trials)?;
        Some(MeanEstimate::from_samples(&base))
    } else {
        None
    };
    let row = RatioRow { instance_id: id, lp_obj: prep.lp_objective, alg: MeanEstimate::from_samples(&objs), baseline };
    Ok(Solved { row, best_trial, best })
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

pub fn solve(a: SolveArgs) -> Outcome {
    let inst = read_instance(&a.instance)?;
    let prep = prepare(&inst, a.horizon)?;
    let solved = run_instance(instance_id(&a.instance), &prep, a.seed, a.trials, a.baseline)?;
    let row = &solved.row;
    println!("lp_objective {:.6}", row.lp_obj);
    println!("alg_mean {:.6} ± {:.6} (95%)  ratio {:.6}", row.alg.mean, row.alg.ci95(), row.alg.mean / row.lp_obj);
    if let Some(b) = &row.baseline {
        println!("baseline_mean {:.6} ± {:.6} (95%)  ratio {:.6}", b.mean, b.ci95(), b.mean / row.lp_obj);
    }
    println!("best_objective {:.6} (trial {})", solved.best.objective, solved.best_trial);

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv = format!("# {}\n{RATIO_HEADER}\n{}\n", provenance(a.seed, a.trials), row.csv());
    write_out(&a.out.join("ratio.csv"), csv.as_bytes())?;
    let mut json = serde_json::to_value(&solved.best).map_err(|e| anyhow!(e))?;
    let obj = json.as_object_mut().expect("schedule is an object");
    obj.insert("version".into(), VERSION.into());
    obj.insert("seed".into(), a.seed.into());
    obj.insert("trials".into(), a.trials.into());
    obj.insert("trial".into(), solved.best_trial.into());
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| anyhow!(e))?;
    text.push('\n');
    write_out(&a.out.join("schedule.json"), text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn synthetic_report(name: &str, seed: u64, trials: u64, opts: &RoundingOptions) -> Result<McReport, Failure> {
    let mut report = McReport::new();
    let all = name == "all";
    let mut known = false;
    if all || name == "pairs" {
        known = true;
        let (frac, groups) = pairs_config();
        report.absorb("pairs", verify_rounding_properties(&frac, &groups, trials, seed, opts)?);
    }
    if all || name == "bad-rich" {
        known = true;
        for s in 0..3 {
            let set = bad_rich_rects(seed.wrapping_add(s));
            let prefix = format!("bad-rich{s}");
            report.absorb(&prefix, tail_bound_check(&set, trials, seed));
            report.absorb(&prefix, decomposition_checks(&set, 100, seed)?);
            report.absorb(&prefix, capacity_law_check(&set, 100, seed));
        }
    }
    if all || name == "grid" {
        known = true;
        report.absorb("grid-start", grid_start_check(&GRID_THETAS, trials, seed));
    }
    if all || name == "identities" {
        known = true;
        report.absorb("identities", identity_checks(50, seed));
    }
    if !known {
        return Err(Failure::usage(format!(
            "unknown synthetic suite {name:?} (expected pairs, bad-rich, grid, identities or all)"
        )));
    }
    Ok(report)
}

fn instance_report(inst: &Instance, a: &VerifyArgs, opts: &RoundingOptions) -> Result<McReport, Failure> {
    let prep = prepare(inst, a.horizon)?;
    let (_, _, groups) = draw_grouping(&prep.rects, StreamKey::new(a.seed, 0));
    let mut report = McReport::new();
    report.absorb("rounding", verify_rounding_properties(&prep.frac, &groups.grouping, a.trials, a.seed, opts)?);
    report.absorb("grouping", tail_bound_check(&prep.rects, a.trials, a.seed));
    report.absorb("lp", decomposition_checks(&prep.rects, 100, a.seed)?);
    report.absorb("lp", capacity_law_check(&prep.rects, 100, a.seed));
    report.absorb("grid-start", grid_start_check(&GRID_THETAS, a.trials, a.seed));
    Ok(report)
}

pub fn verify(a: VerifyArgs) -> Outcome {
    if a.trials < TRIALS_FLOOR {
        return Err(Failure::usage(format!("trials below statistical floor ({} < {TRIALS_FLOOR})", a.trials)));
    }
    let opts = RoundingOptions { tamper_independent: a.tamper_independent, ..Default::default() };
    let report = match (&a.synthetic, &a.instance) {
        (Some(name), _) => synthetic_report(name, a.seed, a.trials, &opts)?,
        (None, Some(path)) => instance_report(&read_instance(path)?, &a, &opts)?,
        (None, None) => return Err(Failure::usage("need an instance path or --synthetic")),
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf, &[provenance(a.seed, a.trials)])?;
    match &a.out {
        Some(path) => write_out(path, &buf)?,
        None => io::stdout().write_all(&buf).context("writing report")?,
    }
    let failed: Vec<_> = report.failures().collect();
    eprintln!("{} tests, {} failed", report.entries.len(), failed.len());
    for e in failed.iter().take(20) {
        eprintln!("  FAIL {} estimate={} bound={} stderr={}", e.test_id, e.estimate, e.bound, e.stderr);
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_STATISTICAL) })
}

pub fn bench(a: BenchArgs) -> Outcome {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.dir)
        .with_context(|| format!("reading {}", a.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut rows = Vec::new();
    for path in &paths {
        let inst = match read_instance(path) {
            Ok(i) => i,
            Err(f) => {
                eprintln!("skipping {}: {:#}", path.display(), f.error);
                continue;
            }
        };
        let prep = prepare(&inst, None)?;
        rows.push(run_instance(instance_id(path), &prep, a.seed, a.trials, a.baseline)?.row);
    }
    let mut csv = format!("# {}\n{RATIO_HEADER}\n", provenance(a.seed, a.trials));
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    if !rows.is_empty() {
        let alg: Vec<f64> = rows.iter().map(|r| r.alg.mean / r.lp_obj).collect();
        let base: Option<Vec<f64>> = rows.iter().map(|r| r.baseline.map(|b| b.mean / r.lp_obj)).collect();
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        for (label, f) in [("aggregate_max_ratio", &max as &dyn Fn(&[f64]) -> f64), ("aggregate_mean_ratio", &mean)] {
            let b = base.as_deref().map_or(String::new(), |b| f(b).to_string());
            csv.push_str(&format!("{label},,{},,{b},,{}\n", f(&alg), a.trials));
        }
    }
    match &a.out {
        Some(path) => write_out(path, csv.as_bytes())?,
        None => io::stdout().write_all(csv.as_bytes()).context("writing report")?,
    }
    Ok(ExitCode::SUCCESS)
}
