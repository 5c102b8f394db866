use crate::error::Result;
use crate::transcript::argmax_lowest;
use crate::weight::Weight;

use super::{unit_weights, AttackResult, ExactState, SubsetSumStage};

/// Largest and second-largest totals; the leader is the lowest index among
/// ties.
pub(crate) fn leader_and_runner_up<T: PartialOrd + Copy>(tally: &[T]) -> (usize, T) {
    let leader = argmax_lowest(tally);
    let runner_up = tally
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != leader)
        .map(|(_, &s)| s)
        .reduce(|a, b| if b > a { b } else { a })
        .expect("at least two choices");
    (leader, runner_up)
}

/// Runs whale rounds until no undetermined voter outweighs the runner-up
/// total. Each round recomputes leader and runner-up once, then assigns
/// every whale found in that round.
pub(crate) fn run(state: &mut ExactState) -> Result<()> {
    loop {
        let (leader, runner_up) = leader_and_runner_up(&state.tally);
        let whales: Vec<usize> = state
            .undetermined
            .iter()
            .copied()
            .filter(|&i| state.weights[i] > runner_up)
            .collect();
        if whales.is_empty() {
            return Ok(());
        }
        for i in whales {
            state.assign(i, leader)?;
        }
    }
}

/// Iterative whale attack on an exact raw tally.
pub fn whale_attack(weights: &[Weight], raw_tally: &[Weight], num_choices: usize) -> Result<AttackResult> {
    let mut state = ExactState::new(weights, raw_tally, num_choices)?;
    run(&mut state)?;
    Ok(state.finish(&unit_weights(weights), SubsetSumStage::NotRun))
}
