//! Independent ground truth and statistical verification: exact optima,
//! configuration decompositions, analysis identities and Monte Carlo suites.

pub mod analysis;
pub mod decompose;
pub mod exact;
pub mod rounding;
pub mod stats;
pub mod suites;

pub use crate::sched::geometry::shifted_prefix_length;
pub use analysis::{
    capacity_law_check, event_law_check, grid_start_check, identity_checks, mutual_delay_residual, prefix_volume,
    self_delay,
};
pub use decompose::{config_decompose, ConfigDecomposition, Configuration, QUANTUM};
pub use exact::{brute_force_opt, smith_order, Optimum};
pub use rounding::{distribution_checks, tail_bound_check, verify_rounding_properties, TRIALS_FLOOR};
pub use stats::{mc_estimate, Check, McEntry, McReport, Verdict, SIGMA_K};

use crate::error::Result;
use crate::lp::RectangleSet;
use crate::rng::{Purpose, StreamKey};
use crate::sched::sample_rho;

/// Grid points used by the grid-start check.
pub const GRID_THETAS: [f64; 4] = [0.3, 1.0, 7.0, 42.0];

/// Decomposes every machine of `set` and reports the three configuration
/// properties plus the largest bad-overlap sum over `rho_draws` draws of ρ.
pub fn decomposition_checks(set: &RectangleSet, rho_draws: u64, seed: u64) -> Result<McReport> {
    let mut report = McReport::new();
    for i in 0..set.machines() {
        let d = config_decompose(set, i)?;
        let budget = QUANTUM * d.rects.len().max(1) as f64;
        report.push(McEntry::exact(
            format!("decomp/i{i}/weight"),
            Check::AtMost,
            d.total_weight(),
            1.0 + 1e-6,
            1,
            seed,
        ));
        report.push(McEntry::exact(
            format!("decomp/i{i}/disjoint"),
            Check::AtLeast,
            f64::from(u8::from(d.disjoint())),
            1.0,
            1,
            seed,
        ));
        report.push(McEntry::exact(
            format!("decomp/i{i}/reconstruction"),
            Check::AtMost,
            d.reconstruction_error(),
            budget,
            1,
            seed,
        ));
        let mut rng = StreamKey::new(seed, i as u64).rng(Purpose::Grid, 0);
        let worst = (0..rho_draws).map(|_| d.max_bad_overlap(sample_rho(&mut rng))).fold(0.0, f64::max);
        report.push(McEntry::exact(format!("overlap/i{i}"), Check::AtMost, worst, 1.0 + 1e-9, rho_draws, seed));
    }
    Ok(report)
}
