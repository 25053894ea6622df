//! Splitting a machine's rectangles into weighted sets of disjoint rectangles.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::error::{Error, Result};
use crate::lp::{Rectangle, RectangleSet};
use crate::sched::geometry::{classify, grid_interval, overlap, shifted_start, Class};

/// Height quantum of the decomposition.
pub const QUANTUM: f64 = 1e-4;

/// Weighted set of pairwise time-disjoint rectangles on one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub weight: f64,
    /// Indices into [`ConfigDecomposition::rects`], by increasing start.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDecomposition {
    pub machine: usize,
    /// The machine's rectangles.
    pub rects: Vec<Rectangle>,
    /// x_ij of each rectangle's job on the machine, parallel to `rects`.
    pub job_heights: Vec<f64>,
    pub configs: Vec<Configuration>,
    /// Height dropped by quantization, summed over rectangles.
    pub quantization_loss: f64,
}

/// Quantizes every rectangle of `machine` to copies of height [`QUANTUM`],
/// first-fits the copies in start order onto the lowest free layer, and
/// merges identical layers.
pub fn config_decompose(set: &RectangleSet, machine: usize) -> Result<ConfigDecomposition> {
    for t in 0..set.max_time() {
        let load = set.load(machine, t);
        if load > 1.0 + 1e-7 {
            return Err(Error::LoadViolation { machine, time: t, load });
        }
    }
    let rects: Vec<Rectangle> = {
        let mut r: Vec<Rectangle> = set.on_machine(machine).map(|(_, r)| *r).collect();
        r.sort_by_key(|r| (r.start, r.job));
        r
    };
    let job_heights = rects.iter().map(|r| set.height(machine, r.job)).collect();
    let mut loss = 0.0;
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut free: BTreeSet<usize> = BTreeSet::new();
    let mut busy: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    for (idx, r) in rects.iter().enumerate() {
        let copies = (r.height / QUANTUM + 1e-6).floor() as usize;
        loss += (r.height - copies as f64 * QUANTUM).max(0.0);
        while let Some(&Reverse((end, layer))) = busy.peek() {
            if end > r.start {
                break;
            }
            busy.pop();
            free.insert(layer);
        }
        for _ in 0..copies {
            let layer = match free.pop_first() {
                Some(l) => l,
                None => {
                    layers.push(Vec::new());
                    layers.len() - 1
                }
            };
            layers[layer].push(idx);
            busy.push(Reverse((r.end(), layer)));
        }
    }
    let mut merged: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for layer in layers {
        *merged.entry(layer).or_default() += 1;
    }
    let configs =
        merged.into_iter().map(|(members, count)| Configuration { weight: count as f64 * QUANTUM, members }).collect();
    Ok(ConfigDecomposition { machine, rects, job_heights, configs, quantization_loss: loss })
}

impl ConfigDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.configs.iter().map(|c| c.weight).sum()
    }

    /// Largest |Σ_{f ∋ R} z_f − x_R| over rectangles.
    pub fn reconstruction_error(&self) -> f64 {
        let mut got = vec![0.0; self.rects.len()];
        for c in &self.configs {
            for &k in &c.members {
                got[k] += c.weight;
            }
        }
        got.iter().zip(&self.rects).map(|(g, r)| (g - r.height).abs()).fold(0.0, f64::max)
    }

    /// Whether every configuration's rectangles are pairwise disjoint.
    pub fn disjoint(&self) -> bool {
        self.configs.iter().all(|c| c.members.windows(2).all(|w| self.rects[w[0]].end() <= self.rects[w[1]].start))
    }

    /// Violated properties; empty when Σ z ≤ 1 + 1e−6, all configurations are
    /// disjoint and heights are reconstructed within ε per rectangle.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let total = self.total_weight();
        if total > 1.0 + 1e-6 {
            out.push(format!("machine {}: total weight {total}", self.machine));
        }
        if !self.disjoint() {
            out.push(format!("machine {}: overlapping rectangles in a configuration", self.machine));
        }
        let err = self.reconstruction_error();
        if err > QUANTUM * self.rects.len().max(1) as f64 {
            out.push(format!("machine {}: height reconstruction error {err}", self.machine));
        }
        out
    }

    /// Largest, over configurations and grid intervals `I` for this `rho`, of
    /// Σ over Bad rectangles of |I ∩ (ŝ, ŝ + p]| / p.
    pub fn max_bad_overlap(&self, rho: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.configs {
            let bad: Vec<(f64, f64)> = c
                .members
                .iter()
                .filter_map(|&k| {
                    let r = &self.rects[k];
                    let (s, p, x) = (r.start as f64, r.len as f64, self.job_heights[k]);
                    (classify(s, p, x) == Class::Bad).then(|| {
                        let hat = shifted_start(s, p, x);
                        (hat, hat + p)
                    })
                })
                .collect();
            let Some(last) = bad.iter().map(|b| b.1).reduce(f64::max) else {
                continue;
            };
            let (k_hi, _) = grid_interval(last, rho);
            for k in k_hi - 30..=k_hi {
                let lo = rho * 10f64.powi(k);
                let hi = rho * 10f64.powi(k + 1);
                let sum: f64 = bad.iter().map(|&(a, b)| overlap(lo, hi, a, b) / (b - a)).sum();
                worst = worst.max(sum);
            }
        }
        worst
    }
}
