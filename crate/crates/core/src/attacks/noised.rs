use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

use super::whale::leader_and_runner_up;
use super::{AttackResult, SubsetSumStage};

/// Whale attack adapted to noised totals.
///
/// A voter is excluded from choice `j` only if `w_i > s_j + d*W`, where `d*W`
/// is the perturbation bound the noise was calibrated to. When the true
/// winner is published alongside the noised totals, any voter holding more
/// than half the weight is assigned to it. There is no subset-sum stage:
/// noised totals are never hit exactly.
pub fn noised_whale_attack(
    weights: &[f64],
    noised_tally: &[f64],
    true_winner: Option<usize>,
    perturbation: f64,
    total_weight: f64,
    num_choices: usize,
) -> Result<AttackResult> {
    if num_choices < 2 || noised_tally.len() != num_choices {
        return Err(Error::param(
            "noised_tally",
            format!("{} totals for {num_choices} choices", noised_tally.len()),
        ));
    }
    if !(perturbation >= 0.0) {
        return Err(Error::param("perturbation", format!("{perturbation} must be non-negative")));
    }
    if let Some(j) = true_winner {
        if j >= num_choices {
            return Err(Error::param("true_winner", format!("{j} is not a choice")));
        }
    }
    let margin = perturbation * total_weight;
    let mut tally = noised_tally.to_vec();
    let mut undetermined: BTreeSet<usize> = (0..weights.len()).collect();
    let mut determined = BTreeMap::new();

    if let Some(winner) = true_winner {
        let majority: Vec<usize> = undetermined
            .iter()
            .copied()
            .filter(|&i| weights[i] > total_weight / 2.0)
            .collect();
        for i in majority {
            undetermined.remove(&i);
            determined.insert(i, winner);
            tally[winner] -= weights[i];
        }
    }

    loop {
        let (leader, runner_up) = leader_and_runner_up(&tally);
        let whales: Vec<usize> = undetermined
            .iter()
            .copied()
            .filter(|&i| weights[i] > runner_up + margin)
            .collect();
        if whales.is_empty() {
            break;
        }
        for i in whales {
            undetermined.remove(&i);
            determined.insert(i, leader);
            tally[leader] -= weights[i];
        }
    }

    Ok(AttackResult::new(determined, weights, SubsetSumStage::NotRun, None))
}
