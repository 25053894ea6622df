//! Rounding a time-indexed LP solution into a schedule.
//!
//! For every machine–job pair with positive height one rectangle is drawn as
//! the representative (with probability proportional to its height), shifted
//! right, and given a uniform offset τ; θ = shifted start + τ decides the
//! order on the machine. Bad representatives (early start, small height) are
//! randomly associated with geometric grid intervals and grouped per
//! interval; contention resolution then assigns jobs to machines.

pub mod geometry;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contention::{Assignment, FracAssignment, Grouping, Resolver, RoundingOptions};
use crate::error::Result;
use crate::instance::Instance;
use crate::lp::{self, RectangleSet};
use crate::rng::{unit_open_closed, Purpose, StreamKey};
pub use geometry::{classify, grid_interval, shift_amount, shifted_start, Class};

/// Probability that a bad job's association coin shows heads.
pub const ASSOCIATION_PROB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representative {
    pub machine: usize,
    pub job: usize,
    pub start: u64,
    pub len: u64,
    /// x_ij, the job's total height on the machine.
    pub height: f64,
    pub tau: f64,
    pub shifted_start: f64,
    pub theta: f64,
    pub class: Class,
}

impl Representative {
    pub fn new(machine: usize, job: usize, start: u64, len: u64, height: f64, tau: f64) -> Self {
        let (s, p) = (start as f64, len as f64);
        let shifted = shifted_start(s, p, height);
        Self {
            machine,
            job,
            start,
            len,
            height,
            tau,
            shifted_start: shifted,
            theta: shifted + tau,
            class: classify(s, p, height),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representatives {
    jobs: usize,
    reps: Vec<Option<Representative>>,
}

impl Representatives {
    pub fn get(&self, machine: usize, job: usize) -> Option<&Representative> {
        self.reps[machine * self.jobs + job].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Representative> {
        self.reps.iter().flatten()
    }

    pub fn on_machine(&self, machine: usize) -> impl Iterator<Item = &Representative> {
        self.reps[machine * self.jobs..(machine + 1) * self.jobs].iter().flatten()
    }
}

/// One representative per pair with positive height, independently; τ is
/// uniform on (0, p_ij]. Consumes two uniforms per such pair.
pub fn choose_representatives<R: Rng + ?Sized>(rects: &RectangleSet, rng: &mut R) -> Representatives {
    let (m, n) = (rects.machines(), rects.jobs());
    let mut reps = vec![None; m * n];
    for i in 0..m {
        for j in 0..n {
            let pair = rects.of_pair(i, j);
            if pair.is_empty() {
                continue;
            }
            let x = rects.height(i, j);
            let target = rng.gen::<f64>() * x;
            let mut cum = 0.0;
            let mut chosen = pair[pair.len() - 1];
            for r in pair {
                cum += r.height;
                if target < cum {
                    chosen = *r;
                    break;
                }
            }
            let tau = chosen.len as f64 * unit_open_closed(rng);
            reps[i * n + j] = Some(Representative::new(i, j, chosen.start, chosen.len, x, tau));
        }
    }
    Representatives { jobs: n, reps }
}

/// Uniform on the open interval (1/10, 1).
pub fn sample_rho<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let r = 0.1 + 0.9 * rng.gen::<f64>();
        if r > 0.1 && r < 1.0 {
            return r;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridContext {
    pub rho: f64,
    pub association_prob: f64,
}

impl GridContext {
    pub fn new(rho: f64) -> Self {
        Self { rho, association_prob: ASSOCIATION_PROB }
    }

    /// `(k, g)` of the interval containing `theta`.
    pub fn interval(&self, theta: f64) -> (i32, f64) {
        grid_interval(theta, self.rho)
    }
}

/// Bad jobs associated with one grid interval on one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub machine: usize,
    pub k: i32,
    pub jobs: Vec<usize>,
    pub height: f64,
    /// False when the total height exceeded 1 and the members stayed singletons.
    pub grouped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingOutcome {
    pub grouping: Grouping,
    pub associations: Vec<Association>,
}

/// Flips the association coin for every bad representative (machine-major,
/// then job order) and groups each interval's associated jobs when their
/// total height is at most 1.
pub fn build_groups<R: Rng + ?Sized>(
    reps: &Representatives,
    machines: usize,
    grid: &GridContext,
    rng: &mut R,
) -> GroupingOutcome {
    let mut grouping = Grouping::singletons(machines);
    let mut associations = Vec::new();
    for i in 0..machines {
        let mut by_interval: Vec<(i32, usize, f64)> = Vec::new();
        for rep in reps.on_machine(i).filter(|r| r.class == Class::Bad) {
            if rng.gen::<f64>() < grid.association_prob {
                by_interval.push((grid.interval(rep.theta).0, rep.job, rep.height));
            }
        }
        by_interval.sort_by_key(|&(k, j, _)| (k, j));
        for chunk in by_interval.chunk_by(|a, b| a.0 == b.0) {
            let jobs: Vec<usize> = chunk.iter().map(|e| e.1).collect();
            let height: f64 = chunk.iter().map(|e| e.2).sum();
            let grouped = height <= 1.0;
            if grouped && jobs.len() > 1 {
                grouping.push(i, jobs.clone());
            }
            associations.push(Association { machine: i, k: chunk[0].0, jobs, height, grouped });
        }
    }
    GroupingOutcome { grouping, associations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledJob {
    pub job: usize,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub objective: f64,
    pub machines: Vec<Vec<ScheduledJob>>,
}

impl Schedule {
    /// Completion time of every job.
    pub fn completion_times(&self, jobs: usize) -> Vec<u64> {
        let mut out = vec![0; jobs];
        for sj in self.machines.iter().flatten() {
            out[sj.job] = sj.end;
        }
        out
    }

    /// Back-to-back from zero, every job exactly once, lengths match `inst`.
    pub fn check(&self, inst: &Instance) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = vec![false; inst.jobs()];
        for (i, seq) in self.machines.iter().enumerate() {
            let mut t = 0;
            for sj in seq {
                if sj.start != t {
                    out.push(format!("job {} on machine {i} starts at {} not {t}", sj.job, sj.start));
                }
                if Some(sj.end - sj.start) != inst.p(i, sj.job) {
                    out.push(format!("job {} has wrong length on machine {i}", sj.job));
                }
                if std::mem::replace(&mut seen[sj.job], true) {
                    out.push(format!("job {} scheduled twice", sj.job));
                }
                t = sj.end;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            out.push(format!("job {j} not scheduled"));
        }
        out
    }
}

/// Stacks the jobs of every machine back to back in increasing θ (ties by
/// job index). `machine_of[j]` must be a machine on which `j` can run.
pub fn assemble_schedule(inst: &Instance, machine_of: &[usize], theta: &[f64]) -> Schedule {
    let mut machines: Vec<Vec<usize>> = vec![Vec::new(); inst.machines()];
    for (j, &i) in machine_of.iter().enumerate() {
        machines[i].push(j);
    }
    let mut objective = 0.0;
    let machines = machines
        .into_iter()
        .enumerate()
        .map(|(i, mut jobs)| {
            jobs.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(a.cmp(&b)));
            let mut t = 0;
            jobs.into_iter()
                .map(|j| {
                    let p = inst.p(i, j).expect("job assigned to an eligible machine");
                    let sj = ScheduledJob { job: j, start: t, end: t + p };
                    t += p;
                    objective += inst.weight(j) * t as f64;
                    sj
                })
                .collect()
        })
        .collect();
    Schedule { objective, machines }
}

/// Schedule for a contention assignment using the θ of each job's
/// representative on its machine.
pub fn assemble_from_assignment(inst: &Instance, assign: &Assignment, reps: &Representatives) -> Schedule {
    let theta: Vec<f64> = assign
        .machine
        .iter()
        .enumerate()
        .map(|(j, &i)| reps.get(i, j).expect("assigned pair has a representative").theta)
        .collect();
    assemble_schedule(inst, &assign.machine, &theta)
}

/// LP solved once and shared across rounding trials.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: Instance,
    pub horizon: u64,
    pub lp_objective: f64,
    pub rects: RectangleSet,
    pub frac: FracAssignment,
}

pub fn prepare(inst: &Instance, horizon: Option<u64>) -> Result<Prepared> {
    let horizon = horizon.unwrap_or_else(|| lp::default_horizon(inst));
    let prob = lp::build_lp::<f64>(inst, horizon)?;
    let sol = lp::solve_lp(&prob)?;
    if sol.status == lp::LpStatus::Infeasible {
        return Err(crate::error::Error::LpInfeasible { residual: sol.objective });
    }
    let rects = lp::extract_rectangles(&prob, &sol);
    let frac = frac_from_rects(&rects)?;
    Ok(Prepared { instance: inst.clone(), horizon, lp_objective: sol.objective, rects, frac })
}

pub fn frac_from_rects(rects: &RectangleSet) -> Result<FracAssignment> {
    FracAssignment::new(
        (0..rects.machines()).map(|i| (0..rects.jobs()).map(|j| rects.height(i, j).min(1.0)).collect()).collect(),
    )
}

/// Everything one rounding run drew, for inspection and verification.
#[derive(Debug, Clone)]
pub struct RoundingRun {
    pub representatives: Representatives,
    pub grid: GridContext,
    pub groups: GroupingOutcome,
    pub assignment: Assignment,
    pub schedule: Schedule,
}

/// Representatives, ρ and coins for trial `key`, without assignment.
pub fn draw_grouping(rects: &RectangleSet, key: StreamKey) -> (Representatives, GridContext, GroupingOutcome) {
    let reps = choose_representatives(rects, &mut key.rng(Purpose::Representatives, 0));
    let mut grid_rng = key.rng(Purpose::Grid, 0);
    let grid = GridContext::new(sample_rho(&mut grid_rng));
    let groups = build_groups(&reps, rects.machines(), &grid, &mut grid_rng);
    (reps, grid, groups)
}

/// One run of the full rounding on a prepared instance.
pub fn round_once(prep: &Prepared, key: StreamKey, opts: &RoundingOptions) -> Result<RoundingRun> {
    let (representatives, grid, groups) = draw_grouping(&prep.rects, key);
    let assignment = Resolver::new(&prep.frac, &groups.grouping, *opts)?.resolve(key)?;
    let schedule = assemble_from_assignment(&prep.instance, &assignment, &representatives);
    Ok(RoundingRun { representatives, grid, groups, assignment, schedule })
}

/// Solves the LP and rounds once; returns the schedule and the LP objective.
pub fn approx_solve(inst: &Instance, seed: u64) -> Result<(Schedule, f64)> {
    let prep = prepare(inst, None)?;
    let run = round_once(&prep, StreamKey::new(seed, 0), &RoundingOptions::default())?;
    Ok((run.schedule, prep.lp_objective))
}

/// Independent rounding: every job picks `(i, s)` with probability `x_ijs`,
/// then θ = s + τ with τ uniform on (0, p_ij], no shifting and no groups.
pub fn independent_round<R: Rng + ?Sized>(inst: &Instance, rects: &RectangleSet, rng: &mut R) -> Schedule {
    let n = inst.jobs();
    let mut per_job: Vec<Vec<&lp::Rectangle>> = vec![Vec::new(); n];
    for r in rects.rects() {
        per_job[r.job].push(r);
    }
    let mut machine_of = vec![0; n];
    let mut theta = vec![0.0; n];
    for j in 0..n {
        let target: f64 = rng.gen();
        let mut cum = 0.0;
        let mut chosen = per_job[j][per_job[j].len() - 1];
        for r in &per_job[j] {
            cum += r.height;
            if target < cum {
                chosen = r;
                break;
            }
        }
        machine_of[j] = chosen.machine;
        theta[j] = chosen.start as f64 + chosen.len as f64 * unit_open_closed(rng);
    }
    assemble_schedule(inst, &machine_of, &theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Contention,
    Independent,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl MeanEstimate {
    /// Two-sided normal 95% half-width.
    pub fn ci95(&self) -> f64 {
        1.959_963_984_540_054 * self.stderr
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var =
            if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { mean, stderr: (var / n).sqrt(), trials: values.len() as u64 }
    }
}

/// Objective of `trials` independent runs (trial `t` uses key `(seed, t)`),
/// in trial order.
pub fn sample_objectives(prep: &Prepared, method: Method, seed: u64, trials: u64) -> Result<Vec<f64>> {
    let opts = RoundingOptions::default();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let key = StreamKey::new(seed, t);
            Ok(match method {
                Method::Contention => round_once(prep, key, &opts)?.schedule.objective,
                Method::Independent => {
                    independent_round(&prep.instance, &prep.rects, &mut key.rng(Purpose::Baseline, 0)).objective
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Rectangle;

    fn rects(list: &[(usize, usize, u64, u64, f64)], m: usize, n: usize) -> RectangleSet {
        RectangleSet::new(
            m,
            n,
            list.iter()
                .map(|&(machine, job, start, len, height)| Rectangle { machine, job, start, len, height })
                .collect(),
        )
    }

    #[test]
    fn single_rectangle_is_always_representative() {
        let set = rects(&[(0, 0, 2, 4, 1.0)], 1, 1);
        for t in 0..100 {
            let reps = choose_representatives(&set, &mut StreamKey::new(1, t).rng(Purpose::Representatives, 0));
            let r = reps.get(0, 0).unwrap();
            assert_eq!(r.start, 2);
            assert!(r.tau > 0.0 && r.tau <= 4.0);
            assert!(r.theta > r.shifted_start && r.theta <= r.shifted_start + 4.0);
        }
    }

    #[test]
    fn representative_frequencies_and_tau_mean() {
        let set = rects(&[(0, 0, 0, 4, 0.3), (0, 0, 4, 4, 0.7)], 1, 1);
        let n = 100_000u64;
        let mut rng = StreamKey::new(2, 0).rng(Purpose::Representatives, 0);
        let (mut first, mut tau_sum) = (0u64, 0.0);
        for _ in 0..n {
            let reps = choose_representatives(&set, &mut rng);
            let r = reps.get(0, 0).unwrap();
            first += u64::from(r.start == 0);
            tau_sum += r.tau;
        }
        let f = first as f64 / n as f64;
        assert!((f - 0.3).abs() <= 4.0 * (0.3f64 * 0.7 / n as f64).sqrt(), "{f}");
        let mean_tau = tau_sum / n as f64;
        let sd = 4.0 / 12f64.sqrt();
        assert!((mean_tau - 2.0).abs() <= 4.0 * sd / (n as f64).sqrt(), "{mean_tau}");
    }

    #[test]
    fn rho_draws() {
        let mut rng = StreamKey::new(3, 0).rng(Purpose::Grid, 0);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_rho(&mut rng)).collect();
        assert!(draws.iter().all(|&r| r > 0.1 && r < 1.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = 0.9 / 12f64.sqrt();
        assert!((mean - 0.55).abs() <= 4.0 * sd / (n as f64).sqrt());
        let below = draws.iter().filter(|&&r| r <= 0.55).count() as f64 / n as f64;
        assert!((below - 0.5).abs() <= 4.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn no_bad_jobs_no_groups() {
        let set = rects(&[(0, 0, 0, 4, 1.0), (0, 1, 4, 4, 1.0)], 1, 2);
        let reps = choose_representatives(&set, &mut StreamKey::new(4, 0).rng(Purpose::Representatives, 0));
        let out = build_groups(&reps, 1, &GridContext::new(0.5), &mut StreamKey::new(4, 0).rng(Purpose::Grid, 0));
        assert!(out.grouping.groups_on(0).is_empty());
        assert!(out.associations.is_empty());
    }

    #[test]
    fn two_bad_jobs_same_interval_grouped() {
        let reps = Representatives {
            jobs: 2,
            reps: vec![
                Some(Representative::new(0, 0, 0, 10, 0.05, 6.0)),
                Some(Representative::new(0, 1, 0, 10, 0.05, 7.0)),
            ],
        };
        let grid = GridContext { rho: 0.5, association_prob: 1.0 };
        let out = build_groups(&reps, 1, &grid, &mut StreamKey::new(5, 0).rng(Purpose::Grid, 0));
        assert_eq!(out.grouping.groups_on(0), &[vec![0, 1]]);
    }

    #[test]
    fn overweight_association_stays_singletons() {
        let reps = Representatives {
            jobs: 12,
            reps: (0..12).map(|j| Some(Representative::new(0, j, 0, 10, 0.089, 6.0))).collect(),
        };
        let grid = GridContext { rho: 0.5, association_prob: 1.0 };
        let out = build_groups(&reps, 1, &grid, &mut StreamKey::new(6, 0).rng(Purpose::Grid, 0));
        assert!(out.grouping.groups_on(0).is_empty());
        assert_eq!(out.associations.len(), 1);
        assert!(!out.associations[0].grouped);
    }

    fn inst(p: Vec<Vec<Option<u64>>>, w: Vec<f64>) -> Instance {
        Instance::new(p, w).unwrap()
    }

    #[test]
    fn stacking() {
        let one = inst(vec![vec![Some(3)]], vec![2.0]);
        let s = assemble_schedule(&one, &[0], &[1.0]);
        assert_eq!(s.objective, 6.0);
        let two = inst(vec![vec![Some(2), Some(5)]], vec![1.0, 1.0]);
        let s = assemble_schedule(&two, &[0, 0], &[0.5, 1.5]);
        assert_eq!(s.completion_times(2), vec![2, 7]);
        assert!(s.check(&two).is_empty());
    }

    #[test]
    fn relabeling_keeps_objective() {
        let i = inst(vec![vec![Some(2), Some(5), Some(1)], vec![Some(3), Some(1), Some(4)]], vec![1.0, 2.0, 3.0]);
        let machine_of = [0, 1, 0];
        let theta = [0.7, 0.2, 0.4];
        let base = assemble_schedule(&i, &machine_of, &theta);
        let order = [2, 0, 1];
        let permuted = i.permute_jobs(&order);
        let pm: Vec<usize> = order.iter().map(|&j| machine_of[j]).collect();
        let pt: Vec<f64> = order.iter().map(|&j| theta[j]).collect();
        assert_eq!(assemble_schedule(&permuted, &pm, &pt).objective, base.objective);
    }

    #[test]
    fn forced_instance_always_costs_p() {
        let one = inst(vec![vec![Some(3)]], vec![1.0]);
        for seed in 0..50 {
            let (s, lp) = approx_solve(&one, seed).unwrap();
            assert_eq!(s.objective, 3.0);
            assert!((lp - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn runs_produce_feasible_schedules() {
        let i = inst(
            vec![vec![Some(2), Some(5), Some(1), Some(3)], vec![Some(3), Some(1), Some(4), None]],
            vec![1.0, 2.0, 3.0, 1.5],
        );
        let prep = prepare(&i, None).unwrap();
        for t in 0..500 {
            let run = round_once(&prep, StreamKey::new(7, t), &RoundingOptions::default()).unwrap();
            assert!(run.schedule.check(&i).is_empty());
            for seq in &run.schedule.machines {
                let m = run.assignment.machine[seq[0].job];
                let thetas: Vec<f64> = seq.iter().map(|sj| run.representatives.get(m, sj.job).unwrap().theta).collect();
                assert!(thetas.windows(2).all(|w| w[0] <= w[1]));
            }
            let base = independent_round(&i, &prep.rects, &mut StreamKey::new(7, t).rng(Purpose::Baseline, 0));
            assert!(base.check(&i).is_empty());
        }
    }

    #[test]
    fn integral_lp_gives_deterministic_baseline_assignment() {
        let set = rects(&[(1, 0, 0, 2, 1.0), (0, 1, 0, 3, 1.0)], 2, 2);
        let i = inst(vec![vec![Some(4), Some(3)], vec![Some(2), Some(5)]], vec![1.0, 1.0]);
        for t in 0..100 {
            let s = independent_round(&i, &set, &mut StreamKey::new(8, t).rng(Purpose::Baseline, 0));
            assert_eq!(s.objective, 5.0);
        }
    }

    #[test]
    fn mean_estimate() {
        let e = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
