//! Enumeration oracles for small instances.
//!
//! Given every other voter's yes-probability, the outcome distribution
//! conditional on voter `i`'s own choice is computed by enumerating the
//! others' vote profiles. From the two conditional distributions follow the
//! optimal bribe margin `alpha* = sum_o max(P[o|yes] - P[o|no], 0)` and the
//! plausible deniability `PD(o) = min_c P[c|o] / P[c]`.
//!
//! Noised outcomes are continuous: the published yes-total is `S - Y` with
//! `Y ~ Laplace(b)`, so each conditional law is a Laplace mixture evaluated
//! on a grid and integrated by the trapezoid rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::dp_scale;
use crate::transcript::{NO, YES};

use super::TallyPolicy;

/// Largest instance accepted by the margin and deniability oracles.
pub const MAX_ENUMERATION_VOTERS: usize = 12;

/// Largest instance accepted by the exact pivotality and success oracles.
pub const MAX_EXACT_VOTERS: usize = 22;

/// Largest integration grid, in points.
const MAX_GRID_POINTS: usize = 4_000_000;

/// Numerical integration grid for noised outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Grid extends this many noise scales beyond the extreme totals.
    pub half_width_scales: f64,
    /// Grid points per noise scale.
    pub steps_per_scale: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            half_width_scales: 12.0,
            steps_per_scale: 200.0,
        }
    }
}

/// A published outcome as seen by the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    /// Every voter's choice, yes = 0 and no = 1.
    Profile { choices: Vec<usize> },
    Winner { winner: usize },
    /// Exact yes-total with the winner (noise scale zero).
    Total { winner: usize, yes_total: f64 },
    /// Grid cell of the noised yes-total; `winner` is absent when the tally
    /// does not publish it.
    NoisedCell { winner: Option<usize>, yes_total: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDeniability {
    pub outcome: Outcome,
    /// Probability (or grid-cell mass) of the outcome.
    pub probability: f64,
    pub deniability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeniabilityReport {
    pub outcomes: Vec<OutcomeDeniability>,
    pub expected: f64,
}

/// One outcome with its probability under each of voter `i`'s choices.
struct Conditional {
    outcome: Outcome,
    given_yes: f64,
    given_no: f64,
}

fn check_instance(weights: &[f64], yes_probs: &[f64], limit: usize) -> Result<()> {
    if weights.len() != yes_probs.len() {
        return Err(Error::param(
            "yes_probs",
            format!("{} weights, {} probabilities", weights.len(), yes_probs.len()),
        ));
    }
    if weights.len() > limit {
        return Err(Error::InstanceTooLarge {
            size: weights.len(),
            limit,
        });
    }
    if weights.is_empty() {
        return Err(Error::param("weights", "no voters"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::param("weights", "negative weight"));
    }
    if yes_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param("yes_probs", "probability outside [0, 1]"));
    }
    Ok(())
}

/// `(yes-total, probability, mask)` over all profiles of `members`.
fn profiles(weights: &[f64], yes_probs: &[f64], members: &[usize]) -> Vec<(f64, f64, u32)> {
    (0..1u32 << members.len())
        .map(|mask| {
            let mut total = 0.0;
            let mut prob = 1.0;
            for (bit, &j) in members.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    total += weights[j];
                    prob *= yes_probs[j];
                } else {
                    prob *= 1.0 - yes_probs[j];
                }
            }
            (total, prob, mask)
        })
        .collect()
}

/// Exact `Delta_i` for every voter by enumerating the other voters.
pub fn exact_pivotality(weights: &[f64], yes_probs: &[f64]) -> Result<Vec<f64>> {
    check_instance(weights, yes_probs, MAX_EXACT_VOTERS)?;
    let half = weights.iter().sum::<f64>() / 2.0;
    Ok((0..weights.len())
        .map(|i| {
            let others: Vec<usize> = (0..weights.len()).filter(|&j| j != i).collect();
            profiles(weights, yes_probs, &others)
                .into_iter()
                .filter(|&(t, _, _)| t >= half - weights[i] && t < half)
                .map(|(_, p, _)| p)
                .sum()
        })
        .collect())
}

/// Exact `Pr[sum_i w_i X_i > W/2]`.
pub fn exact_success_probability(weights: &[f64], yes_probs: &[f64]) -> Result<f64> {
    check_instance(weights, yes_probs, MAX_EXACT_VOTERS)?;
    let half = weights.iter().sum::<f64>() / 2.0;
    let all: Vec<usize> = (0..weights.len()).collect();
    Ok(profiles(weights, yes_probs, &all)
        .into_iter()
        .filter(|&(t, _, _)| t > half)
        .map(|(_, p, _)| p)
        .sum())
}

fn winner_of(yes_total: f64, half: f64) -> usize {
    if yes_total >= half {
        YES
    } else {
        NO
    }
}

/// Laplace mixture `sum_k pi_k f_b(z - s_k)` at every grid point, computed
/// with one forward and one backward exponential sweep.
fn mixture_density(support: &[(f64, f64)], grid_start: f64, step: f64, points: usize, scale: f64) -> Vec<f64> {
    let decay = (-step / scale).exp();
    let at = |m: usize| grid_start + m as f64 * step;
    let mut sorted: Vec<(f64, f64)> = support.iter().copied().filter(|&(_, p)| p > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // mass at or left of each grid point
    let mut left = vec![0.0; points];
    let mut k = 0;
    let mut acc = 0.0;
    for (m, slot) in left.iter_mut().enumerate() {
        let z = at(m);
        acc *= if m == 0 { 0.0 } else { decay };
        while k < sorted.len() && sorted[k].0 <= z {
            acc += sorted[k].1 * (-(z - sorted[k].0) / scale).exp();
            k += 1;
        }
        *slot = acc;
    }
    // mass strictly right of each grid point
    let mut density = vec![0.0; points];
    let mut k = sorted.len();
    let mut acc = 0.0;
    for m in (0..points).rev() {
        let z = at(m);
        acc *= if m + 1 == points { 0.0 } else { decay };
        while k > 0 && sorted[k - 1].0 > z {
            acc += sorted[k - 1].1 * (-(sorted[k - 1].0 - z) / scale).exp();
            k -= 1;
        }
        density[m] = (left[m] + acc) / (2.0 * scale);
    }
    density
}

/// Groups `(total, probability)` pairs whose totals agree to `tol`.
fn group_totals(mut items: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, p) in items {
        match out.last_mut() {
            Some(last) if t - last.0 <= tol => last.1 += p,
            _ => out.push((t, p)),
        }
    }
    out
}

fn conditionals(
    weights: &[f64],
    yes_probs: &[f64],
    voter: usize,
    policy: &TallyPolicy,
    disc: &Discretization,
) -> Result<Vec<Conditional>> {
    check_instance(weights, yes_probs, MAX_ENUMERATION_VOTERS)?;
    if voter >= weights.len() {
        return Err(Error::param("voter", format!("{voter} is not a voter")));
    }
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let half = total / 2.0;
    let w = weights[voter];
    let others: Vec<usize> = (0..n).filter(|&j| j != voter).collect();
    let rest = profiles(weights, yes_probs, &others);

    let out = match policy {
        TallyPolicy::FullDisclosure => {
            let mut out = Vec::with_capacity(2 * rest.len());
            for &(_, prob, mask) in &rest {
                for own in [YES, NO] {
                    let mut choices = vec![NO; n];
                    choices[voter] = own;
                    for (bit, &j) in others.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            choices[j] = YES;
                        }
                    }
                    let (given_yes, given_no) = if own == YES { (prob, 0.0) } else { (0.0, prob) };
                    out.push(Conditional {
                        outcome: Outcome::Profile { choices },
                        given_yes,
                        given_no,
                    });
                }
            }
            out
        }
        TallyPolicy::WinnerOnly => [YES, NO]
            .into_iter()
            .map(|winner| {
                let mass = |own: f64| -> f64 {
                    rest.iter()
                        .filter(|&&(t, _, _)| winner_of(t + own, half) == winner)
                        .map(|&(_, p, _)| p)
                        .sum()
                };
                Conditional {
                    outcome: Outcome::Winner { winner },
                    given_yes: mass(w),
                    given_no: mass(0.0),
                }
            })
            .collect(),
        TallyPolicy::CorrectedNoised { noise } if noise.scale() == 0.0 => {
            // the published totals are exact; group float sums that agree
            let tol = 1e-9 * total;
            let mut out = Vec::new();
            for winner in [YES, NO] {
                let side = |own: f64| -> Vec<(f64, f64)> {
                    rest.iter()
                        .filter(|&&(t, _, _)| winner_of(t + own, half) == winner)
                        .map(|&(t, p, _)| (t + own, p))
                        .collect()
                };
                let (ys, ns) = (side(w), side(0.0));
                let all = ys.iter().chain(&ns).map(|&(t, _)| (t, 0.0)).collect();
                let keys: Vec<f64> = group_totals(all, tol).into_iter().map(|(t, _)| t).collect();
                let given_yes = assign_to_keys(&keys, ys, tol);
                let given_no = assign_to_keys(&keys, ns, tol);
                for (k, &yes_total) in keys.iter().enumerate() {
                    out.push(Conditional {
                        outcome: Outcome::Total { winner, yes_total },
                        given_yes: given_yes[k],
                        given_no: given_no[k],
                    });
                }
            }
            out
        }
        TallyPolicy::CorrectedNoised { noise } => noised_cells(&rest, w, half, noise.scale(), true, disc)?,
        TallyPolicy::DpNoised { epsilon } => {
            let max = weights.iter().copied().fold(0.0, f64::max);
            noised_cells(&rest, w, half, dp_scale(max, *epsilon)?, false, disc)?
        }
    };
    Ok(out)
}

fn assign_to_keys(keys: &[f64], items: Vec<(f64, f64)>, tol: f64) -> Vec<f64> {
    let mut out = vec![0.0; keys.len()];
    for (t, p) in items {
        let k = keys.partition_point(|&key| key < t - tol);
        let k = k.min(keys.len() - 1);
        out[k] += p;
    }
    out
}

fn noised_cells(
    rest: &[(f64, f64, u32)],
    w: f64,
    half: f64,
    scale: f64,
    publishes_winner: bool,
    disc: &Discretization,
) -> Result<Vec<Conditional>> {
    if !(disc.half_width_scales > 0.0 && disc.steps_per_scale > 0.0) {
        return Err(Error::param("discretization", "grid parameters must be positive"));
    }
    let lo = rest.iter().map(|r| r.0).fold(f64::INFINITY, f64::min) - disc.half_width_scales * scale;
    let hi = rest.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max) + w + disc.half_width_scales * scale;
    let step = scale / disc.steps_per_scale;
    let points = ((hi - lo) / step).ceil() as usize + 1;
    if points > MAX_GRID_POINTS {
        return Err(Error::InstanceTooLarge {
            size: points,
            limit: MAX_GRID_POINTS,
        });
    }
    let classes: Vec<Option<usize>> = if publishes_winner {
        vec![Some(YES), Some(NO)]
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for class in classes {
        let side = |own: f64| -> Vec<(f64, f64)> {
            rest.iter()
                .filter(|&&(t, _, _)| class.is_none_or(|c| winner_of(t + own, half) == c))
                .map(|&(t, p, _)| (t + own, p))
                .collect()
        };
        let yes = mixture_density(&side(w), lo, step, points, scale);
        let no = mixture_density(&side(0.0), lo, step, points, scale);
        for m in 0..points {
            let cell = if m == 0 || m + 1 == points { step / 2.0 } else { step };
            out.push(Conditional {
                outcome: Outcome::NoisedCell {
                    winner: class,
                    yes_total: lo + m as f64 * step,
                },
                given_yes: yes[m] * cell,
                given_no: no[m] * cell,
            });
        }
    }
    Ok(out)
}

/// Optimal bribe margin `alpha*_i` for voter `voter` given everyone's
/// yes-probability.
pub fn optimal_bribe_margin_bruteforce(
    weights: &[f64],
    yes_probs: &[f64],
    voter: usize,
    policy: &TallyPolicy,
    disc: &Discretization,
) -> Result<f64> {
    let cond = conditionals(weights, yes_probs, voter, policy, disc)?;
    Ok(cond.iter().map(|c| (c.given_yes - c.given_no).max(0.0)).sum())
}

/// Per-outcome and expected plausible deniability of `voter`.
///
/// The voter's prior is their own yes-probability. When the prior puts no
/// mass on a choice, the minimum runs over the choices with positive prior
/// only, which makes every outcome fully deniable.
pub fn plausible_deniability(
    weights: &[f64],
    yes_probs: &[f64],
    voter: usize,
    policy: &TallyPolicy,
    disc: &Discretization,
) -> Result<DeniabilityReport> {
    let cond = conditionals(weights, yes_probs, voter, policy, disc)?;
    let prior_yes = yes_probs[voter];
    let prior_no = 1.0 - prior_yes;
    let mut outcomes = Vec::new();
    let mut expected = 0.0;
    for c in cond {
        let probability = prior_yes * c.given_yes + prior_no * c.given_no;
        if probability <= 0.0 {
            continue;
        }
        let mut ratios = Vec::with_capacity(2);
        if prior_yes > 0.0 {
            ratios.push(c.given_yes / probability);
        }
        if prior_no > 0.0 {
            ratios.push(c.given_no / probability);
        }
        let deniability = ratios.into_iter().fold(f64::INFINITY, f64::min);
        expected += probability * deniability;
        outcomes.push(OutcomeDeniability {
            outcome: c.outcome,
            probability,
            deniability,
        });
    }
    Ok(DeniabilityReport { outcomes, expected })
}
