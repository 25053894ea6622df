//! Exact optima for small instances.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Largest number of machine assignments [`brute_force_opt`] will enumerate.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Indices of `jobs` (`(p, w)` pairs) in Smith order: nonincreasing w/p,
/// ties by ascending p, then index.
pub fn smith_order(jobs: &[(u64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| {
        let ((pa, wa), (pb, wb)) = (jobs[a], jobs[b]);
        (wb * pa as f64).partial_cmp(&(wa * pb as f64)).unwrap_or(Ordering::Equal).then(pa.cmp(&pb)).then(a.cmp(&b))
    });
    order
}

/// Σ w C of the jobs processed back to back in the given order.
pub fn sequence_cost(jobs: &[(u64, f64)], order: &[usize]) -> f64 {
    let mut t = 0;
    order
        .iter()
        .map(|&k| {
            t += jobs[k].0;
            jobs[k].1 * t as f64
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub objective: f64,
    /// Machine of every job.
    pub assignment: Vec<usize>,
}

/// Minimum Σ w_j C_j over all assignments, each machine in Smith order.
pub fn brute_force_opt(inst: &Instance) -> Result<Optimum> {
    let (m, n) = (inst.machines(), inst.jobs());
    if (m as f64).powi(n as i32) > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { machines: m, jobs: n });
    }
    let options: Vec<Vec<usize>> = (0..n).map(|j| inst.eligible(j).map(|(i, _)| i).collect()).collect();
    let mut digits = vec![0usize; n];
    let mut best = Optimum { objective: f64::INFINITY, assignment: Vec::new() };
    let mut per_machine: Vec<Vec<(u64, f64)>> = vec![Vec::new(); m];
    loop {
        for v in &mut per_machine {
            v.clear();
        }
        for j in 0..n {
            let i = options[j][digits[j]];
            per_machine[i].push((inst.p(i, j).expect("eligible"), inst.weight(j)));
        }
        let cost: f64 = per_machine.iter().map(|jobs| sequence_cost(jobs, &smith_order(jobs))).sum();
        if cost < best.objective {
            best = Optimum { objective: cost, assignment: (0..n).map(|j| options[j][digits[j]]).collect() };
        }
        let mut j = 0;
        while j < n {
            digits[j] += 1;
            if digits[j] < options[j].len() {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
        if j == n {
            return Ok(best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smith_examples() {
        let jobs = [(1, 1.0), (2, 1.0)];
        let order = smith_order(&jobs);
        assert_eq!(order, vec![0, 1]);
        assert_eq!(sequence_cost(&jobs, &order), 4.0);
        let tie = [(2, 1.0), (4, 2.0)];
        assert_eq!(smith_order(&tie), vec![0, 1]);
        assert_eq!(sequence_cost(&tie, &[0, 1]), 14.0);
        assert_eq!(sequence_cost(&tie, &[1, 0]), 14.0);
        assert_eq!(smith_order(&[(3, 1.0)]), vec![0]);
    }

    #[test]
    fn brute_force_examples() {
        let a = Instance::new(vec![vec![Some(1), Some(2)]], vec![1.0, 1.0]).unwrap();
        assert_eq!(brute_force_opt(&a).unwrap().objective, 4.0);
        let b = Instance::new(vec![vec![Some(1), Some(1)], vec![Some(1), Some(1)]], vec![1.0, 1.0]).unwrap();
        let opt = brute_force_opt(&b).unwrap();
        assert_eq!(opt.objective, 2.0);
        assert_ne!(opt.assignment[0], opt.assignment[1]);
        let c = Instance::new(vec![vec![Some(3)], vec![Some(5)]], vec![1.0]).unwrap();
        assert_eq!(brute_force_opt(&c).unwrap(), Optimum { objective: 3.0, assignment: vec![0] });
    }

    #[test]
    fn guard() {
        let inst = Instance::new(vec![vec![Some(1); 24]; 2], vec![1.0; 24]).unwrap();
        assert!(matches!(brute_force_opt(&inst), Err(Error::TooLarge { .. })));
    }

    proptest! {
        #[test]
        fn smith_is_optimal_on_one_machine(jobs in proptest::collection::vec((1u64..10, 1u32..10), 1..6)) {
            let jobs: Vec<(u64, f64)> = jobs.into_iter().map(|(p, w)| (p, f64::from(w))).collect();
            let smith = sequence_cost(&jobs, &smith_order(&jobs));
            let mut perm: Vec<usize> = (0..jobs.len()).collect();
            let mut best = f64::INFINITY;
            permutations(&mut perm, 0, &mut |o| best = best.min(sequence_cost(&jobs, o)));
            prop_assert!((smith - best).abs() < 1e-9);
        }
    }

    fn permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permutations(v, k + 1, f);
            v.swap(k, i);
        }
    }
}
