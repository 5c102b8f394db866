//! Benchmark fixtures shared by the criterion targets.

use bpriv_core::transcript::{NO, YES};
use bpriv_core::{VotingTranscript, Weight};

/// Binary transcript with `n` distinct 18-decimal weights built from a
/// linear congruential sequence, so fixtures need no random generator.
pub fn distinct_transcript(n: usize, seed: u64) -> VotingTranscript {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut weights = Vec::with_capacity(n);
    let mut choices = Vec::with_capacity(n);
    for i in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let units = u128::from(state >> 8) * 1_000 + i as u128 + 1;
        weights.push(Weight::from_units(units));
        choices.push(if state >> 63 == 0 { YES } else { NO });
    }
    VotingTranscript::new(format!("bench-{n}"), 2, 18, weights, choices).expect("fixture is valid")
}
