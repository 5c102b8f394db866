//! B-privacy: the minimum bribe budget that lets the adversary reach a
//! target success probability under a given tally algorithm.
//!
//! Budgets are in the same utility unit as the utility means and standard
//! deviation, so absolute budgets only compare within one utility scale;
//! the ratio to the full-disclosure budget (relative B-privacy) is the
//! scale-free figure.

mod allocation;
mod bprivacy;
mod mdc;

pub use allocation::{allocate, select_targets, AllocationKind, AllocationStrategy, TargetRule, LOG_WEIGHT_FLOOR};
pub use bprivacy::{
    compute_bprivacy, geometric_mean, relative_bprivacy, BPrivacyConfig, BPrivacyResult, BisectSpec, Probe,
    StrategySearch,
};
pub use mdc::mdc;
