//! Deconstruction strategies: each one picks a `(new, anchor)` pair per step
//! until a single node remains, producing a candidate arrival history.
//!
//! Within a chosen pair the node with the larger id is treated as the new
//! node. The step statistics are symmetric in the pair, so this only affects
//! the labels recorded in the history.

mod exhaustive;
mod greedy;
mod random;
pub(crate) mod scan;

use serde::{Deserialize, Serialize};

pub use exhaustive::{exhaustive, for_each_pair_sequence, DEFAULT_EXHAUSTIVE_CAP};
pub use greedy::{
    minimize_y, minimize_y_then_nk, minimize_y_with_mode, nk_greedy, nk_greedy_at,
    nk_greedy_with_mode, nk_grid_search, NkConfig, SearchOutcome,
};
pub use random::{random_sequences, true_new_random_anchor, true_theta};
pub use scan::ScanMode;

use crate::engine::{max_log_likelihood, SufficientStats, Theta};

/// A candidate history together with its statistics and the log-likelihood
/// at the statistics' own closed-form maximiser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeconstructionResult {
    pub theta: Theta,
    pub stats: SufficientStats,
    pub log_likelihood_at_mle: f64,
}

impl DeconstructionResult {
    pub fn new(theta: Theta, stats: SufficientStats) -> Self {
        DeconstructionResult {
            log_likelihood_at_mle: max_log_likelihood(&stats),
            theta,
            stats,
        }
    }
}

/// Tie-aware "strictly better" comparison used by every stopping rule.
pub(crate) const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + IMPROVEMENT_TOLERANCE
        || (incumbent == f64::NEG_INFINITY && candidate > incumbent)
}

/// Derives an independent sub-seed (splitmix64 finaliser over the inputs).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(*p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
