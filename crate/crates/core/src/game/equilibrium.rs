//! Fixed-point equilibrium of the bribery game.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::margin::{bribe_margin, vote_threshold};
use super::montecarlo::{pivotality_map_with, MonteCarloSpec, UniformBank};
use super::{TallyPolicy, UtilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Weight of the freshly computed pivotality in each update.
    pub relaxation: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            relaxation: 0.7,
            tolerance: 1e-3,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub pivotality: Vec<f64>,
    pub bribe_margin: Vec<f64>,
    pub yes_prob: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Solves the equilibrium with a bank drawn from `mc`.
pub fn solve_equilibrium(
    weights: &[f64],
    utility: &UtilityModel,
    bribes: &[f64],
    policy: &TallyPolicy,
    mc: &MonteCarloSpec,
    options: &EquilibriumOptions,
) -> Result<EquilibriumState> {
    let bank = UniformBank::from_spec(weights.len(), mc);
    solve_equilibrium_with(&bank, weights, utility, bribes, policy, options)
}

/// Iterates `alpha -> p -> F -> Delta` with under-relaxation until the
/// largest pivotality change drops below the tolerance.
///
/// The same uniform bank is used in every iteration, so the map iterated is
/// deterministic and the stopping rule measures the solver, not sampling
/// noise. Starting pivotality is evaluated at the unbribed vote
/// probabilities. Non-convergence is reported through `converged`.
pub fn solve_equilibrium_with(
    bank: &UniformBank,
    weights: &[f64],
    utility: &UtilityModel,
    bribes: &[f64],
    policy: &TallyPolicy,
    options: &EquilibriumOptions,
) -> Result<EquilibriumState> {
    let n = weights.len();
    if utility.len() != n || bribes.len() != n {
        return Err(Error::param(
            "bribes",
            format!("{n} weights, {} utilities, {} bribes", utility.len(), bribes.len()),
        ));
    }
    if bank.voters() != n {
        return Err(Error::param("bank", format!("{} columns for {n} voters", bank.voters())));
    }
    if let Some(b) = bribes.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::param("bribes", format!("{b} is negative")));
    }
    if !(options.relaxation > 0.0 && options.relaxation <= 1.0) {
        return Err(Error::param("relaxation", format!("{} is outside (0, 1]", options.relaxation)));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::param("tolerance", format!("{} must be positive", options.tolerance)));
    }

    let respond = |delta: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut alpha = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for i in 0..n {
            alpha.push(bribe_margin(policy, delta[i], weights[i])?);
            let threshold = vote_threshold(policy, delta[i], weights[i], bribes[i])?;
            p.push(utility.yes_probability(i, threshold));
        }
        Ok((alpha, p))
    };

    let unbribed: Vec<f64> = (0..n).map(|i| utility.yes_probability(i, 0.0)).collect();
    let mut delta = pivotality_map_with(bank, weights, &unbribed);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let (_, p) = respond(&delta)?;
        let fresh = pivotality_map_with(bank, weights, &p);
        let mut change: f64 = 0.0;
        for (d, f) in delta.iter_mut().zip(&fresh) {
            let next = options.relaxation * f + (1.0 - options.relaxation) * *d;
            change = change.max((next - *d).abs());
            *d = next;
        }
        if change < options.tolerance {
            converged = true;
            break;
        }
    }
    let (alpha, p) = respond(&delta)?;
    tracing::trace!(iterations, converged, "equilibrium solved");
    Ok(EquilibriumState {
        pivotality: delta,
        bribe_margin: alpha,
        yes_prob: p,
        converged,
        iterations,
    })
}
