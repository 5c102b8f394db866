//! Voting transcripts and the deterministic tally algorithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight::{Weight, MAX_SCALE};

/// Choice index of "yes" in binary proposals.
pub const YES: usize = 0;
/// Choice index of "no" in binary proposals.
pub const NO: usize = 1;

/// Weights and choices for one proposal.
///
/// Every ballot puts the voter's whole weight on a single choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingTranscript {
    proposal_id: String,
    num_choices: usize,
    scale: u32,
    weights: Vec<Weight>,
    choices: Vec<usize>,
    total: Weight,
}

impl VotingTranscript {
    pub fn new(
        proposal_id: impl Into<String>,
        num_choices: usize,
        scale: u32,
        weights: Vec<Weight>,
        choices: Vec<usize>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidTranscript(msg));
        if num_choices < 2 {
            return invalid(format!("need at least 2 choices, got {num_choices}"));
        }
        if scale > MAX_SCALE {
            return invalid(format!("scale {scale} exceeds {MAX_SCALE}"));
        }
        if weights.is_empty() {
            return invalid("no voters".into());
        }
        if weights.len() != choices.len() {
            return invalid(format!(
                "{} weights but {} choices",
                weights.len(),
                choices.len()
            ));
        }
        if let Some((i, c)) = choices.iter().enumerate().find(|(_, &c)| c >= num_choices) {
            return invalid(format!("voter {i} chose {c}, only {num_choices} choices"));
        }
        let total = weights
            .iter()
            .try_fold(Weight::ZERO, |acc, &w| acc.checked_add(w))
            .ok_or(Error::WeightOverflow)?;
        if total.is_zero() {
            return invalid("total weight is zero".into());
        }
        Ok(VotingTranscript {
            proposal_id: proposal_id.into(),
            num_choices,
            scale,
            weights,
            choices,
            total,
        })
    }

    /// Builds a transcript from decimal weight strings.
    pub fn from_decimals(
        proposal_id: impl Into<String>,
        num_choices: usize,
        scale: u32,
        ballots: &[(&str, usize)],
    ) -> Result<Self> {
        let weights = ballots
            .iter()
            .map(|(w, _)| Weight::parse(w, scale))
            .collect::<Result<Vec<_>>>()?;
        let choices = ballots.iter().map(|&(_, c)| c).collect();
        Self::new(proposal_id, num_choices, scale, weights, choices)
    }

    pub fn proposal_id(&self) -> &str {
        &self.proposal_id
    }

    pub fn num_choices(&self) -> usize {
        self.num_choices
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.num_choices == 2
    }

    pub fn total_weight(&self) -> Weight {
        self.total
    }

    pub fn total_weight_f64(&self) -> f64 {
        self.total.to_f64(self.scale)
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64(self.scale)).collect()
    }

    pub fn max_weight(&self) -> Weight {
        self.weights.iter().copied().max().unwrap_or(Weight::ZERO)
    }

    /// Exact per-choice totals.
    pub fn raw_totals(&self) -> Vec<Weight> {
        let mut totals = vec![Weight::ZERO; self.num_choices];
        for (&w, &c) in self.weights.iter().zip(&self.choices) {
            totals[c] += w;
        }
        totals
    }

    /// Winning choice; ties go to the lowest choice index.
    pub fn winner(&self) -> usize {
        argmax_lowest(&self.raw_totals())
    }
}

/// Index of the largest element, preferring the lowest index on ties.
pub fn argmax_lowest<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = j;
        }
    }
    best
}

/// Published result of a tally algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TallyOutcome {
    Winner(usize),
    Raw(Vec<Weight>),
    Noised(Vec<f64>),
    CorrectedNoised { noised: Vec<f64>, winner: usize },
    Full(VotingTranscript),
}

pub fn tally_raw(t: &VotingTranscript) -> TallyOutcome {
    TallyOutcome::Raw(t.raw_totals())
}

pub fn tally_winner(t: &VotingTranscript) -> TallyOutcome {
    TallyOutcome::Winner(t.winner())
}

pub fn tally_full(t: &VotingTranscript) -> TallyOutcome {
    TallyOutcome::Full(t.clone())
}
