//! Shared benchmark fixtures.

use eqvar::simulate::{simulate, WeightDist};
use eqvar::{DataMatrix, SimConfig};

/// Data from the default simulation protocol: weights on +-[0.3, 1], unit
/// error variances, expected edge count `3p/4`.
pub fn protocol_data(p: usize, n: usize, seed: u64) -> DataMatrix {
    let mut cfg = SimConfig::new(p, n, seed);
    cfg.weights = WeightDist::Uniform { lo: 0.3, hi: 1.0 };
    simulate(&cfg).expect("valid protocol config").data
}
