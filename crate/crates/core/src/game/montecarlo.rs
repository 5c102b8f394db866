//! Monte Carlo estimates of pivotality and adversary success.
//!
//! Every estimate reads one shared matrix of uniforms (common random
//! numbers): row `r` decides every voter's vote via `X_j = [u_rj < p_j]`, and
//! rows come in antithetic pairs `(u, 1 - u)`. Each column is also
//! stratified across groups (Latin hypercube): group `g` draws voter `j`'s
//! uniform from stratum `pi_j(g)` of `[0, 1)`, with `pi_j` a seeded
//! permutation, so every voter's marginal is covered evenly. Counts are
//! integers, so the result is identical for any thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;

use super::std_normal_cdf;

/// Banks with at most this many base uniforms are kept in memory; larger
/// ones regenerate their rows on demand from the same streams.
const MATERIALIZE_LIMIT: usize = 4_000_000;

/// Seed label of the per-column stratum permutations.
const STRATA_LABEL: u64 = 0x57_7A7A;

/// Seed label for the escalated success-probability bank.
const ESCALATION_LABEL: u64 = 0xE5CA_1A7E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Sample count used when a success estimate lands near its target.
    pub escalated_samples: usize,
    /// Distance to the target that triggers escalation.
    pub escalation_band: f64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            samples: 1000,
            seed: 0,
            antithetic: true,
            escalated_samples: 10_000,
            escalation_band: 0.01,
        }
    }
}

impl MonteCarloSpec {
    pub fn with_seed(seed: u64) -> Self {
        MonteCarloSpec {
            seed,
            ..Self::default()
        }
    }
}

/// Shared uniform matrix with `samples` rows over `voters` columns.
#[derive(Debug, Clone)]
pub struct UniformBank {
    voters: usize,
    samples: usize,
    seed: u64,
    antithetic: bool,
    data: Option<Vec<f64>>,
}

impl UniformBank {
    pub fn new(voters: usize, samples: usize, seed: u64, antithetic: bool) -> Self {
        let mut bank = UniformBank {
            voters,
            samples,
            seed,
            antithetic,
            data: None,
        };
        let groups = bank.groups();
        if groups.saturating_mul(voters) <= MATERIALIZE_LIMIT {
            let mut data = vec![0.0; groups * voters];
            data.par_chunks_mut(voters.max(1))
                .enumerate()
                .for_each(|(g, row)| bank.fill(g, row));
            bank.data = Some(data);
        }
        bank
    }

    pub fn from_spec(voters: usize, spec: &MonteCarloSpec) -> Self {
        Self::new(voters, spec.samples, spec.seed, spec.antithetic)
    }

    pub fn voters(&self) -> usize {
        self.voters
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    fn group_size(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }

    fn groups(&self) -> usize {
        self.samples.div_ceil(self.group_size())
    }

    fn rows_in(&self, g: usize) -> usize {
        (self.samples - g * self.group_size()).min(self.group_size())
    }

    fn fill(&self, g: usize, row: &mut [f64]) {
        let mut rng = rng::stream(self.seed, g as u64);
        let groups = self.groups() as u64;
        let strata_seed = rng::derive_seed(self.seed, STRATA_LABEL);
        for (j, u) in row.iter_mut().enumerate() {
            let stratum = rng::permute_index(rng::derive_seed(strata_seed, j as u64), g as u64, groups);
            *u = (stratum as f64 + rng.random::<f64>()) / groups as f64;
        }
    }

    /// Base uniforms of group `g`; the antithetic partner row is `1 - u`.
    fn group<'a>(&'a self, g: usize, buf: &'a mut Vec<f64>) -> &'a [f64] {
        match &self.data {
            Some(data) => &data[g * self.voters..(g + 1) * self.voters],
            None => {
                buf.resize(self.voters, 0.0);
                self.fill(g, buf);
                buf
            }
        }
    }

    /// Folds `visit(acc, base, rows)` over every group of rows. A group holds
    /// one base row and, with antithetic sampling, its mirrored partner, so
    /// paired statistics can be formed.
    fn fold_groups<A, F, R>(&self, identity: A, visit: F, reduce: R) -> A
    where
        A: Send + Sync + Clone,
        F: Fn(&mut A, &[f64], usize) + Sync + Send,
        R: Fn(A, A) -> A + Sync + Send,
    {
        (0..self.groups())
            .into_par_iter()
            .fold(
                || (identity.clone(), Vec::new()),
                |(mut acc, mut buf), g| {
                    let rows = self.rows_in(g);
                    let base = self.group(g, &mut buf);
                    visit(&mut acc, base, rows);
                    (acc, buf)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(|| identity.clone(), reduce)
    }
}

/// Fills `x` with the 0/1 votes of row `row` of a group and returns the yes
/// weight. Written without data-dependent branches so it vectorizes.
fn row_votes(weights: &[f64], base: &[f64], yes_probs: &[f64], row: usize, x: &mut [f64]) -> f64 {
    if row == 0 {
        for ((x, &u), &p) in x.iter_mut().zip(base).zip(yes_probs) {
            *x = f64::from(u8::from(u < p));
        }
    } else {
        for ((x, &u), &p) in x.iter_mut().zip(base).zip(yes_probs) {
            *x = f64::from(u8::from(1.0 - u < p));
        }
    }
    weights.iter().zip(x.iter()).map(|(w, x)| w * x).sum()
}

fn check_dims(bank: &UniformBank, weights: &[f64], yes_probs: &[f64]) {
    assert_eq!(weights.len(), yes_probs.len(), "one yes-probability per voter");
    assert_eq!(bank.voters(), weights.len(), "bank width must match voter count");
}

/// `Delta_i = Pr[sum_{j != i} w_j X_j in [W/2 - w_i, W/2)]` for every voter.
pub fn pivotality_map(weights: &[f64], yes_probs: &[f64], mc: &MonteCarloSpec) -> Vec<f64> {
    let bank = UniformBank::from_spec(weights.len(), mc);
    pivotality_map_with(&bank, weights, yes_probs)
}

pub fn pivotality_map_with(bank: &UniformBank, weights: &[f64], yes_probs: &[f64]) -> Vec<f64> {
    check_dims(bank, weights, yes_probs);
    let n = weights.len();
    if n == 0 || bank.samples() == 0 {
        return vec![0.0; n];
    }
    let half = weights.iter().sum::<f64>() / 2.0;
    let low: Vec<f64> = weights.iter().map(|w| half - w).collect();
    let (counts, _) = bank.fold_groups(
        (vec![0u64; n], vec![0.0; n]),
        |(counts, x), base, rows| {
            for row in 0..rows {
                let yes = row_votes(weights, base, yes_probs, row, x);
                for (((c, &w), &xi), &lo) in counts.iter_mut().zip(weights).zip(x.iter()).zip(&low) {
                    let others = yes - w * xi;
                    *c += u64::from((others >= lo) & (others < half));
                }
            }
        },
        |(mut a, x), (b, _)| {
            for (p, q) in a.iter_mut().zip(b) {
                *p += q;
            }
            (a, x)
        },
    );
    let r = bank.samples() as f64;
    let (mean, var) = weights.iter().zip(yes_probs).fold((0.0, 0.0), |(m, v), (&w, &p)| {
        (m + w * p, v + w * w * p * (1.0 - p))
    });
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if c > 0 {
                return c as f64 / r;
            }
            let (w, p) = (weights[i], yes_probs[i]);
            let others_mean = mean - w * p;
            let others_var = (var - w * w * p * (1.0 - p)).max(0.0);
            normal_pivotality(half, w, others_mean, others_var).min(1.0 / r)
        })
        .collect()
}

/// Normal approximation of `Pr[S in [half - w, half)]` for `S` with the given
/// mean and variance. Used for voters no sample found pivotal, so a rare but
/// possible pivotal event is not reported as impossible.
fn normal_pivotality(half: f64, w: f64, mean: f64, var: f64) -> f64 {
    if !(var > 0.0) {
        return 0.0;
    }
    let sd = var.sqrt();
    let hi = (half - mean) / sd;
    let lo = (half - w - mean) / sd;
    // differences of upper tails keep precision far in the right tail
    if lo > 0.0 {
        (std_normal_cdf(-lo) - std_normal_cdf(-hi)).max(0.0)
    } else {
        (std_normal_cdf(hi) - std_normal_cdf(lo)).max(0.0)
    }
}

/// Standard error of a Monte Carlo frequency `estimate` over `samples` rows.
pub fn binomial_std_error(estimate: f64, samples: usize) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    (estimate * (1.0 - estimate) / samples as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub p_succ: f64,
    /// Standard error from the spread of group means (antithetic pairs).
    pub std_error: f64,
    pub samples: usize,
}

/// `p_succ = Pr[sum_i w_i X_i > W/2]`, escalating to the larger sample count
/// when the first estimate is within the escalation band of `target`.
pub fn success_probability(
    weights: &[f64],
    yes_probs: &[f64],
    mc: &MonteCarloSpec,
    target: Option<f64>,
) -> SuccessEstimate {
    let bank = UniformBank::from_spec(weights.len(), mc);
    let first = success_probability_with(&bank, weights, yes_probs);
    match target {
        Some(t) if (first.p_succ - t).abs() <= mc.escalation_band && mc.escalated_samples > mc.samples => {
            let seed = rng::derive_seed(mc.seed, ESCALATION_LABEL);
            let big = UniformBank::new(weights.len(), mc.escalated_samples, seed, mc.antithetic);
            success_probability_with(&big, weights, yes_probs)
        }
        _ => first,
    }
}

pub fn success_probability_with(bank: &UniformBank, weights: &[f64], yes_probs: &[f64]) -> SuccessEstimate {
    check_dims(bank, weights, yes_probs);
    let samples = bank.samples();
    if samples == 0 {
        return SuccessEstimate {
            p_succ: 0.0,
            std_error: 0.0,
            samples,
        };
    }
    let half = weights.iter().sum::<f64>() / 2.0;
    // hits[k] = number of full groups with k successful rows; `partial` counts
    // rows of a trailing incomplete group
    let (hits, partial, _) = bank.fold_groups(
        ([0u64; 3], 0u64, vec![0.0; weights.len()]),
        |(hits, partial, x), base, rows| {
            let mut k = 0usize;
            for row in 0..rows {
                let yes = row_votes(weights, base, yes_probs, row, x);
                if yes > half {
                    k += 1;
                }
            }
            if rows == bank.group_size() {
                hits[k] += 1;
            } else {
                *partial += k as u64;
            }
        },
        |(mut a, pa, x), (b, pb, _)| {
            for (p, q) in a.iter_mut().zip(b) {
                *p += q;
            }
            (a, pa + pb, x)
        },
    );
    let size = bank.group_size() as f64;
    let successes = hits[1] + 2 * hits[2] + partial;
    let p_succ = successes as f64 / samples as f64;
    let groups = hits.iter().sum::<u64>();
    let std_error = if groups > 1 {
        let means = [0.0, 1.0 / size, 2.0 / size];
        let mean = (0..3).map(|k| hits[k] as f64 * means[k]).sum::<f64>() / groups as f64;
        let var = (0..3)
            .map(|k| hits[k] as f64 * (means[k] - mean).powi(2))
            .sum::<f64>()
            / (groups - 1) as f64;
        (var / groups as f64).sqrt()
    } else {
        binomial_std_error(p_succ, samples)
    };
    SuccessEstimate {
        p_succ,
        std_error,
        samples,
    }
}
