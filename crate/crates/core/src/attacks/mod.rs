//! Ballot extraction from published tallies.
//!
//! Given the public voter weights and a tally, these attacks determine which
//! voters' choices are fixed by the tally alone:
//!
//! * the [whale attack](whale_attack) uses the fact that a voter heavier than
//!   every non-leading total must have voted for the leader, iterating as
//!   removals shrink (and possibly reorder) the totals;
//! * the [subset-sum attack](subset_sum_attack) asks, for each remaining
//!   voter, which choices admit an exact partition of everyone else's weight
//!   into the remaining totals, using meet-in-the-middle enumeration;
//! * [`noised_whale_attack`] is the conservative variant for noised tallies.
//!
//! On exact tallies every determination is sound: it holds in every
//! transcript consistent with the tally.

mod noised;
mod subset_sum;
mod whale;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight::Weight;

pub use noised::noised_whale_attack;
pub use subset_sum::{partition_feasibility, subset_sum_attack, Feasibility, DEFAULT_SUBSET_SUM_CAP};
pub use whale::whale_attack;

/// What happened to the subset-sum stage of an attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SubsetSumStage {
    NotRun,
    Completed { residual_voters: usize },
    Skipped { residual_voters: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    /// Voter index to the choice the tally forces.
    pub determined: BTreeMap<usize, usize>,
    pub undetermined: BTreeSet<usize>,
    pub ballots_leaked_pct: f64,
    pub weight_leaked_pct: f64,
    /// At least one voter's choice is determined.
    pub deniability_broken: bool,
    /// Every voter's choice is determined.
    pub full_recovery: bool,
    pub subset_sum: SubsetSumStage,
    /// Totals left after removing determined voters (exact attacks only).
    pub residual_tally: Option<Vec<Weight>>,
}

impl AttackResult {
    pub(crate) fn new(
        determined: BTreeMap<usize, usize>,
        weights: &[f64],
        subset_sum: SubsetSumStage,
        residual_tally: Option<Vec<Weight>>,
    ) -> Self {
        let n = weights.len();
        let undetermined: BTreeSet<usize> = (0..n).filter(|i| !determined.contains_key(i)).collect();
        let total: f64 = weights.iter().sum();
        let leaked: f64 = determined.keys().map(|&i| weights[i]).sum();
        AttackResult {
            ballots_leaked_pct: if n == 0 { 0.0 } else { 100.0 * determined.len() as f64 / n as f64 },
            weight_leaked_pct: if total > 0.0 { 100.0 * leaked / total } else { 0.0 },
            deniability_broken: !determined.is_empty(),
            full_recovery: n > 0 && undetermined.is_empty(),
            determined,
            undetermined,
            subset_sum,
            residual_tally,
        }
    }
}

/// Working state shared by the exact attacks, in integer weight units.
#[derive(Debug, Clone)]
pub(crate) struct ExactState {
    weights: Vec<u128>,
    tally: Vec<u128>,
    determined: BTreeMap<usize, usize>,
    undetermined: BTreeSet<usize>,
}

impl ExactState {
    pub(crate) fn new(weights: &[Weight], raw_tally: &[Weight], num_choices: usize) -> Result<Self> {
        if num_choices < 2 || raw_tally.len() != num_choices {
            return Err(Error::param(
                "raw_tally",
                format!("{} totals for {num_choices} choices", raw_tally.len()),
            ));
        }
        let weights: Vec<u128> = weights.iter().map(|w| w.units()).collect();
        let tally: Vec<u128> = raw_tally.iter().map(|w| w.units()).collect();
        let weight_sum = weights.iter().try_fold(0u128, |a, &w| a.checked_add(w));
        let tally_sum = tally.iter().try_fold(0u128, |a, &s| a.checked_add(s));
        if weight_sum.is_none() || weight_sum != tally_sum {
            return Err(Error::InvalidTranscript("tally totals do not sum to the total weight".into()));
        }
        Ok(ExactState {
            undetermined: (0..weights.len()).collect(),
            weights,
            tally,
            determined: BTreeMap::new(),
        })
    }

    pub(crate) fn assign(&mut self, voter: usize, choice: usize) -> Result<()> {
        let w = self.weights[voter];
        self.tally[choice] = self.tally[choice]
            .checked_sub(w)
            .ok_or_else(|| Error::InvalidTranscript("tally is inconsistent with the weights".into()))?;
        self.undetermined.remove(&voter);
        self.determined.insert(voter, choice);
        Ok(())
    }

    pub(crate) fn finish(self, scale_free_weights: &[f64], stage: SubsetSumStage) -> AttackResult {
        let residual = self.tally.iter().map(|&s| Weight::from_units(s)).collect();
        AttackResult::new(self.determined, scale_free_weights, stage, Some(residual))
    }
}

fn unit_weights(weights: &[Weight]) -> Vec<f64> {
    weights.iter().map(|w| w.units() as f64).collect()
}

/// Whale attack to a fixpoint, then the subset-sum attack on whatever is left
/// when at most `subset_sum_cap` voters remain.
pub fn unified_attack(
    weights: &[Weight],
    raw_tally: &[Weight],
    num_choices: usize,
    subset_sum_cap: usize,
) -> Result<AttackResult> {
    let mut state = ExactState::new(weights, raw_tally, num_choices)?;
    whale::run(&mut state)?;
    let stage = subset_sum::run(&mut state, subset_sum_cap)?;
    Ok(state.finish(&unit_weights(weights), stage))
}
