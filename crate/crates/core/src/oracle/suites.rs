//! Fixed instance and configuration families used by the verification
//! commands and the test suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::contention::{FracAssignment, Grouping};
use crate::error::Result;
use crate::instance::{generate_random, GenParams, Instance};
use crate::lp::{Rectangle, RectangleSet};
use crate::rng::{Purpose, StreamKey};

/// Twenty small instances: m ∈ {2, 3}, n ∈ 4..=8, p ∈ [1, 6].
pub fn desk_suite() -> Result<Vec<(String, Instance)>> {
    (0..20u64)
        .map(|k| {
            let params = GenParams {
                machine_count: 2 + (k % 2) as usize,
                job_count: 4 + (k % 5) as usize,
                p_min: 1,
                p_max: 6,
                w_min: 1.0,
                w_max: 10.0,
                absent_prob: if k % 4 == 3 { 0.2 } else { 0.0 },
            };
            Ok((format!("desk{k:02}"), generate_random(&params, 1000 + k)?))
        })
        .collect()
}

/// Random fractional assignment with 2..=4 machines and 2..=8 jobs, and a
/// random legal grouping in which about half the positive pairs are grouped.
pub fn random_contention_config(seed: u64) -> (FracAssignment, Grouping) {
    let mut rng = StreamKey::new(seed, 0).rng(Purpose::Oracle, 10);
    let m = rng.gen_range(2..=4);
    let n = rng.gen_range(2..=8);
    let mut x = vec![vec![0.0; n]; m];
    for j in 0..n {
        let mut support: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.7)).collect();
        if support.is_empty() {
            support.push(rng.gen_range(0..m));
        }
        let raw: Vec<f64> = support.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut acc = 0.0;
        for (k, &i) in support.iter().enumerate() {
            // last share absorbs rounding so the column sums to 1
            x[i][j] = if k + 1 == support.len() { 1.0 - acc } else { raw[k] / total };
            acc += x[i][j];
        }
    }
    let mut grouping = Grouping::singletons(m);
    for (i, row) in x.iter().enumerate() {
        let mut jobs: Vec<usize> = (0..n).filter(|&j| row[j] > 0.0).collect();
        jobs.shuffle(&mut rng);
        let mut k = 0;
        while k < jobs.len() {
            let mut group = vec![jobs[k]];
            let mut height = row[jobs[k]];
            k += 1;
            if rng.gen_bool(0.5) {
                while k < jobs.len() && group.len() < 3 && height + row[jobs[k]] <= 1.0 {
                    height += row[jobs[k]];
                    group.push(jobs[k]);
                    k += 1;
                }
            }
            if group.len() > 1 {
                group.sort_unstable();
                grouping.push(i, group);
            }
        }
    }
    (FracAssignment::new(x).expect("columns sum to one"), grouping)
}

/// Three machines, six jobs; machine 0 groups two jobs of height 0.09.
pub fn pairs_config() -> (FracAssignment, Grouping) {
    let x = vec![
        vec![0.09, 0.09, 0.3, 0.2, 0.5, 0.05],
        vec![0.91, 0.5, 0.3, 0.4, 0.25, 0.45],
        vec![0.0, 0.41, 0.4, 0.4, 0.25, 0.5],
    ];
    let groups = Grouping::new(vec![vec![vec![0, 1], vec![4, 5]], vec![vec![2, 3]], vec![vec![1, 4]]]);
    (FracAssignment::new(x).expect("columns sum to one"), groups)
}

/// LP-feasible rectangle set made almost entirely of Bad rectangles: on
/// 12..=16 machines, consecutive blocks of up to m jobs each spread evenly
/// (height 1/m) over all machines, every block starting before a tenth of its
/// length.
pub fn bad_rich_rects(seed: u64) -> RectangleSet {
    let mut rng = StreamKey::new(seed, 0).rng(Purpose::Oracle, 11);
    let m = rng.gen_range(12..=16usize);
    let blocks = rng.gen_range(2..=4);
    let mut rects = Vec::new();
    let mut start = 0u64;
    let mut job = 0;
    for _ in 0..blocks {
        let len = 10 * start + rng.gen_range(1..=20);
        let count = rng.gen_range(m / 2..=m);
        for _ in 0..count {
            for machine in 0..m {
                rects.push(Rectangle { machine, job, start, len, height: 1.0 / m as f64 });
            }
            job += 1;
        }
        start += len + rng.gen_range(0..=3);
    }
    RectangleSet::new(m, job, rects)
}
