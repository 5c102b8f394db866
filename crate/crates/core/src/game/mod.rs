//! The bribery game.
//!
//! An adversary commits per-voter bribes `b_i` and payment conditions on the
//! published outcome; voters with private utility `U_i ~ N(mu_i, sigma^2)` for
//! the "no" outcome then vote. In equilibrium voter `i` votes yes iff
//! `U_i <= alpha_i * b_i / Delta_i`, where `Delta_i` is the voter's
//! pivotality and `alpha_i` the bribe margin the tally algorithm allows.
//!
//! Only per-voter condition functions are modelled. A correlated payment
//! scheme affects each voter solely through their own marginal probability
//! of being paid under each choice, so it induces the same margins and the
//! same equilibrium as the independent scheme with those marginals.

mod bruteforce;
mod equilibrium;
mod margin;
mod montecarlo;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::transcript::VotingTranscript;

pub use bruteforce::{
    exact_pivotality, exact_success_probability, optimal_bribe_margin_bruteforce, plausible_deniability,
    DeniabilityReport, Discretization, Outcome, OutcomeDeniability, MAX_ENUMERATION_VOTERS, MAX_EXACT_VOTERS,
};
pub use equilibrium::{solve_equilibrium, solve_equilibrium_with, EquilibriumOptions, EquilibriumState};
pub use margin::{bribe_margin, vote_threshold, PIVOTALITY_FLOOR};
pub use montecarlo::{
    binomial_std_error, pivotality_map, pivotality_map_with, success_probability, success_probability_with, MonteCarloSpec,
    SuccessEstimate, UniformBank,
};

/// How a tally is published, as seen by the bribing adversary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TallyPolicy {
    FullDisclosure,
    WinnerOnly,
    CorrectedNoised { noise: NoiseSpec },
    DpNoised { epsilon: f64 },
}

impl TallyPolicy {
    pub fn label(&self) -> &'static str {
        match self {
            TallyPolicy::FullDisclosure => "public",
            TallyPolicy::WinnerOnly => "winner-only",
            TallyPolicy::CorrectedNoised { .. } => "corrected-noised",
            TallyPolicy::DpNoised { .. } => "dp-noised",
        }
    }
}

/// Gaussian utilities for the "no" outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    means: Vec<f64>,
    sigma: f64,
}

impl UtilityModel {
    pub fn new(means: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("{sigma} must be positive")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("means", "must be finite"));
        }
        Ok(UtilityModel { means, sigma })
    }

    /// Voters on the observed winning side get `mu = +1` (they prefer the
    /// outcome the adversary fights), everyone else `mu = -1`.
    pub fn from_transcript(t: &VotingTranscript, sigma: f64) -> Result<Self> {
        if !t.is_binary() {
            return Err(Error::NotBinary {
                num_choices: t.num_choices(),
            });
        }
        let winner = t.winner();
        let means = t.choices().iter().map(|&c| if c == winner { 1.0 } else { -1.0 }).collect();
        Self::new(means, sigma)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// `Pr[U_i <= threshold]`.
    pub fn yes_probability(&self, voter: usize, threshold: f64) -> f64 {
        if threshold == f64::INFINITY {
            return 1.0;
        }
        std_normal_cdf((threshold - self.means[voter]) / self.sigma)
    }

    /// Voters who oppose the adversary's outcome absent bribes.
    pub fn opposing(&self) -> Vec<usize> {
        (0..self.means.len()).filter(|&i| self.means[i] > 0.0).collect()
    }
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}
