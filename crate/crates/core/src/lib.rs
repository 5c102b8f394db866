//! Privacy analysis for weighted voting.
//!
//! The crate covers three layers:
//!
//! * transcripts, exact fixed-point weights and the tally algorithms
//!   (winner-only, raw, noised, corrected noised, full disclosure), plus
//!   Laplace noise calibration by tally perturbation;
//! * [`attacks`] that recover individual ballots from published tallies;
//! * the bribery [`game`] and the [`optimizer`] that turns equilibria into
//!   B-privacy: the minimum bribe budget needed to reach a target success
//!   probability under a given tally algorithm.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod attacks;
pub mod error;
pub mod game;
pub mod noise;
pub mod optimizer;
pub mod rng;
pub mod transcript;
pub mod weight;

pub use error::{Error, Result};
pub use noise::{calibrate_noise, Calibration, NoiseMode, NoiseSpec};
pub use transcript::{tally_full, tally_raw, tally_winner, TallyOutcome, VotingTranscript, NO, YES};
pub use weight::{Weight, DEFAULT_SCALE};
