//! Synthetic binary corpora with controlled weight skew.

use bpriv_core::rng;
use bpriv_core::transcript::{NO, YES};
use bpriv_core::Weight;
use rand::Rng;

use crate::ingest::{ProposalRecord, VoterRecord};

const SCALE: u32 = 18;

/// Decimal string of `w` at 18 places, nudged by `salt` units so weights
/// within one proposal stay distinct.
fn weight_string(w: f64, salt: usize) -> String {
    let units = (w * 1e18).round() as u128 + salt as u128;
    Weight::from_units(units).to_decimal_string(SCALE)
}

fn record(id: String, dao: &str, voters: Vec<(f64, usize)>) -> ProposalRecord {
    ProposalRecord {
        id,
        dao: dao.to_string(),
        num_choices: 2,
        voters: voters
            .into_iter()
            .enumerate()
            .map(|(i, (w, choice))| VoterRecord {
                weight: weight_string(w, i + 1),
                choice,
            })
            .collect(),
        metadata: Default::default(),
    }
}

/// Pareto weights with tail index `shape` (smaller is more skewed), and
/// choices leaning towards yes with probability `lean`.
pub fn skewed_proposal(seed: u64, id: &str, dao: &str, voters: usize, shape: f64, lean: f64) -> ProposalRecord {
    let mut rng = rng::stream(seed, 0);
    let ballots = (0..voters)
        .map(|_| {
            let u: f64 = rng.random();
            let w = (1.0 - u).powf(-1.0 / shape);
            let c = if rng.random::<f64>() < lean { YES } else { NO };
            (w, c)
        })
        .collect();
    record(id.to_string(), dao, ballots)
}

/// One voter holds a majority of the weight and decides the outcome alone.
pub fn whale_proposal(seed: u64, id: &str, dao: &str, voters: usize) -> ProposalRecord {
    let mut rng = rng::stream(seed, 1);
    let small: Vec<(f64, usize)> = (1..voters)
        .map(|_| (rng.random_range(0.5..1.5), if rng.random::<bool>() { YES } else { NO }))
        .collect();
    let rest: f64 = small.iter().map(|v| v.0).sum();
    let whale_side = if rng.random::<bool>() { YES } else { NO };
    let mut ballots = vec![(rest * rng.random_range(1.2..2.0), whale_side)];
    ballots.extend(small);
    record(id.to_string(), dao, ballots)
}

/// Near-equal weights and a clear majority, so many voters must switch to
/// change the outcome.
pub fn dispersed_proposal(seed: u64, id: &str, dao: &str, voters: usize) -> ProposalRecord {
    let mut rng = rng::stream(seed, 2);
    let winners = (voters as f64 * 0.68).round() as usize;
    let winner_side = if rng.random::<bool>() { YES } else { NO };
    let ballots = (0..voters)
        .map(|i| {
            let c = if i < winners { winner_side } else { 1 - winner_side };
            (rng.random_range(0.9..1.1), c)
        })
        .collect();
    record(id.to_string(), dao, ballots)
}

/// `count` proposals cycling through three weight regimes: heavy tailed,
/// moderately skewed and nearly uniform, with sizes in `[min, max]`.
pub fn mixed_corpus(seed: u64, count: usize, min_voters: usize, max_voters: usize) -> Vec<ProposalRecord> {
    let mut rng = rng::stream(seed, u64::MAX);
    (0..count)
        .map(|i| {
            let n = rng.random_range(min_voters..=max_voters);
            let (dao, shape) = match i % 3 {
                0 => ("heavy-tail", 1.1),
                1 => ("skewed", 2.0),
                _ => ("flat", 6.0),
            };
            let lean = rng.random_range(0.3..0.7);
            skewed_proposal(rng::derive_seed(seed, i as u64), &format!("syn-{i:04}"), dao, n, shape, lean)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{to_proposal, IngestOptions, IngestReport, Mode};
    use bpriv_core::optimizer::mdc;

    fn parse(r: ProposalRecord) -> bpriv_core::VotingTranscript {
        let options = IngestOptions {
            scale: 18,
            abstain_choice: None,
            mode: Mode::Attack,
        };
        to_proposal(r, &options, &mut IngestReport::default()).unwrap().transcript
    }

    #[test]
    fn cohorts_have_the_intended_mdc() {
        for s in 0..10 {
            assert_eq!(mdc(&parse(whale_proposal(s, "w", "d", 30))).unwrap(), 1);
            assert!(mdc(&parse(dispersed_proposal(s, "d", "d", 40))).unwrap() >= 5);
        }
    }

    #[test]
    fn weights_are_distinct_and_reproducible() {
        let a = skewed_proposal(3, "x", "d", 60, 1.1, 0.5);
        assert_eq!(a, skewed_proposal(3, "x", "d", 60, 1.1, 0.5));
        let t = parse(a);
        let mut w = t.weights().to_vec();
        w.sort();
        w.dedup();
        assert_eq!(w.len(), 60);
        let corpus = mixed_corpus(1, 9, 20, 30);
        assert_eq!(corpus.len(), 9);
        assert!(corpus.iter().all(|r| (20..=30).contains(&r.voters.len())));
    }
}
