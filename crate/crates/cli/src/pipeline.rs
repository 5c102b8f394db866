//! Corpus runs. Proposals are processed in parallel; results keep input
//! order, and every proposal draws randomness from a seed derived from the
//! run seed and its position, so outputs do not depend on scheduling.

use std::time::Instant;

use bpriv_core::attacks::{noised_whale_attack, unified_attack, AttackResult, SubsetSumStage};
use bpriv_core::game::{MonteCarloSpec, TallyPolicy, UtilityModel};
use bpriv_core::noise::{corrected_from_draws, NoiseMode};
use bpriv_core::optimizer::{compute_bprivacy, mdc, relative_bprivacy, BPrivacyConfig, BPrivacyResult, BisectSpec};
use bpriv_core::rng;
use bpriv_core::{calibrate_noise, TallyOutcome};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::ingest::Proposal;

/// Attack metrics for one proposal. Noised runs average over trials, so the
/// two flags become fractions of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRow {
    pub id: String,
    pub dao: String,
    pub voters: usize,
    pub num_choices: usize,
    pub determined: f64,
    pub ballots_leaked_pct: f64,
    pub weight_leaked_pct: f64,
    pub deniability_broken: f64,
    pub full_recovery: f64,
    pub subset_sum: String,
    pub error: Option<String>,
}

impl AttackRow {
    fn failed(p: &Proposal, error: String) -> Self {
        AttackRow {
            id: p.id().to_string(),
            dao: p.dao.clone(),
            voters: p.transcript.len(),
            num_choices: p.transcript.num_choices(),
            determined: 0.0,
            ballots_leaked_pct: 0.0,
            weight_leaked_pct: 0.0,
            deniability_broken: 0.0,
            full_recovery: 0.0,
            subset_sum: String::new(),
            error: Some(error),
        }
    }

    fn from_results(p: &Proposal, results: &[AttackResult]) -> Self {
        let k = results.len() as f64;
        let mean = |f: &dyn Fn(&AttackResult) -> f64| results.iter().map(f).sum::<f64>() / k;
        let stage = match results.first().map(|r| r.subset_sum) {
            Some(SubsetSumStage::Completed { .. }) => "completed",
            Some(SubsetSumStage::Skipped { .. }) => "skipped",
            _ => "not-run",
        };
        AttackRow {
            id: p.id().to_string(),
            dao: p.dao.clone(),
            voters: p.transcript.len(),
            num_choices: p.transcript.num_choices(),
            determined: mean(&|r| r.determined.len() as f64),
            ballots_leaked_pct: mean(&|r| r.ballots_leaked_pct),
            weight_leaked_pct: mean(&|r| r.weight_leaked_pct),
            deniability_broken: mean(&|r| f64::from(u8::from(r.deniability_broken))),
            full_recovery: mean(&|r| f64::from(u8::from(r.full_recovery))),
            subset_sum: stage.to_string(),
            error: None,
        }
    }
}

fn proposal_seed(config: &RunConfig, index: usize) -> u64 {
    rng::derive_seed(config.seed, index as u64)
}

fn timed<T>(p: &Proposal, stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    tracing::info!(
        proposal = p.id(),
        voters = p.transcript.len(),
        stage,
        elapsed_ms = start.elapsed().as_secs_f64() * 1e3,
        "proposal done"
    );
    out
}

/// Whale plus subset-sum attack on the exact raw tally.
pub fn attack_proposal(p: &Proposal, config: &RunConfig) -> AttackRow {
    let t = &p.transcript;
    match unified_attack(t.weights(), &t.raw_totals(), t.num_choices(), config.subset_sum_cap) {
        Ok(r) => AttackRow::from_results(p, &[r]),
        Err(e) => AttackRow::failed(p, e.to_string()),
    }
}

/// Noised whale attack against corrected noised tallies calibrated to
/// `(perturbation_d, frequency_q)`, averaged over independent noise draws.
pub fn attack_noised_proposal(p: &Proposal, config: &RunConfig, seed: u64) -> AttackRow {
    let t = &p.transcript;
    let total = t.total_weight_f64();
    let run = || -> bpriv_core::Result<Vec<AttackResult>> {
        let spec = calibrate_noise(config.perturbation_d, config.frequency_q, total)?;
        let mode = NoiseMode::default_for(t.num_choices());
        let weights = t.weights_f64();
        (0..config.noised_trials)
            .map(|trial| {
                let mut rng = rng::stream(seed, trial as u64);
                let draws: Vec<f64> = (0..mode.draws_needed(t.num_choices()))
                    .map(|_| spec.sample(&mut rng))
                    .collect();
                let TallyOutcome::CorrectedNoised { noised, winner } = corrected_from_draws(t, mode, &draws)? else {
                    unreachable!("corrected_from_draws returns a corrected noised tally")
                };
                noised_whale_attack(
                    &weights,
                    &noised,
                    Some(winner),
                    config.perturbation_d,
                    total,
                    t.num_choices(),
                )
            })
            .collect()
    };
    match run() {
        Ok(results) => AttackRow::from_results(p, &results),
        Err(e) => AttackRow::failed(p, e.to_string()),
    }
}

pub fn run_attacks(proposals: &[Proposal], config: &RunConfig) -> Vec<AttackRow> {
    proposals
        .par_iter()
        .map(|p| timed(p, "attack", || attack_proposal(p, config)))
        .collect()
}

pub fn run_attacks_noised(proposals: &[Proposal], config: &RunConfig) -> Vec<AttackRow> {
    proposals
        .par_iter()
        .enumerate()
        .map(|(i, p)| timed(p, "attack-noised", || attack_noised_proposal(p, config, proposal_seed(config, i))))
        .collect()
}

/// B-privacy of one policy for one proposal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyBudget {
    pub budget: f64,
    pub strategy: String,
    pub p_succ: f64,
    /// Whether the heaviest opposing voter receives a bribe in the plan.
    pub heaviest_bribed: bool,
}

/// One proposal at one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BPrivacyRow {
    pub id: String,
    pub dao: String,
    pub voters: usize,
    pub mdc: usize,
    pub d: f64,
    pub noise_scale: f64,
    pub public: Option<PolicyBudget>,
    pub noised: Option<PolicyBudget>,
    pub winner_only: Option<PolicyBudget>,
    pub relative_noised: Option<f64>,
    pub relative_winner_only: Option<f64>,
    pub error: Option<String>,
}

fn bprivacy_config(config: &RunConfig, seed: u64) -> BPrivacyConfig {
    BPrivacyConfig {
        target_p: config.target_p,
        strategies: config.strategy_set.strategies(),
        mc: MonteCarloSpec {
            samples: config.mc_samples,
            seed,
            escalated_samples: config.escalated_samples,
            ..MonteCarloSpec::default()
        },
        search: BisectSpec {
            max_budget: config.max_budget,
            ..BisectSpec::default()
        },
        ..BPrivacyConfig::default()
    }
}

fn summarize(result: &BPrivacyResult, utility: &UtilityModel, weights: &[f64]) -> PolicyBudget {
    let heaviest = utility
        .opposing()
        .into_iter()
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)));
    PolicyBudget {
        budget: result.budget,
        strategy: result.strategy.to_string(),
        p_succ: result.achieved_p_succ,
        heaviest_bribed: heaviest.is_some_and(|i| result.bribes[i] > 0.0),
    }
}

/// B-privacy under full disclosure, winner-only, and the corrected noised
/// tally at every perturbation in `d_values`; one row per perturbation.
pub fn bprivacy_proposal(p: &Proposal, config: &RunConfig, d_values: &[f64], seed: u64) -> Vec<BPrivacyRow> {
    let t = &p.transcript;
    let total = t.total_weight_f64();
    let weights = t.weights_f64();
    let bcfg = bprivacy_config(config, seed);
    let blank = |d: f64, error: Option<String>| BPrivacyRow {
        id: p.id().to_string(),
        dao: p.dao.clone(),
        voters: t.len(),
        mdc: mdc(t).unwrap_or(0),
        d,
        noise_scale: 0.0,
        public: None,
        noised: None,
        winner_only: None,
        relative_noised: None,
        relative_winner_only: None,
        error,
    };
    let utility = match UtilityModel::from_transcript(t, config.sigma) {
        Ok(u) => u,
        Err(e) => return d_values.iter().map(|&d| blank(d, Some(e.to_string()))).collect(),
    };
    let public = compute_bprivacy(t, &utility, &TallyPolicy::FullDisclosure, &bcfg);
    let winner = compute_bprivacy(t, &utility, &TallyPolicy::WinnerOnly, &bcfg);
    d_values
        .iter()
        .map(|&d| {
            let mut row = blank(d, None);
            let mut errors = Vec::new();
            let noised = calibrate_noise(d, config.frequency_q, total).and_then(|noise| {
                row.noise_scale = noise.scale();
                compute_bprivacy(t, &utility, &TallyPolicy::CorrectedNoised { noise }, &bcfg)
            });
            for (label, r) in [("public", &public), ("noised", &noised), ("winner-only", &winner)] {
                if let Err(e) = r {
                    errors.push(format!("{label}: {e}"));
                }
            }
            row.public = public.as_ref().ok().map(|r| summarize(r, &utility, &weights));
            row.noised = noised.as_ref().ok().map(|r| summarize(r, &utility, &weights));
            row.winner_only = winner.as_ref().ok().map(|r| summarize(r, &utility, &weights));
            if let Ok(base) = &public {
                row.relative_noised = noised.as_ref().ok().map(|r| relative_bprivacy(r, base));
                row.relative_winner_only = winner.as_ref().ok().map(|r| relative_bprivacy(r, base));
            }
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect()
}

pub fn run_bprivacy(proposals: &[Proposal], config: &RunConfig, d_values: &[f64]) -> Vec<BPrivacyRow> {
    proposals
        .par_iter()
        .enumerate()
        .map(|(i, p)| timed(p, "bprivacy", || bprivacy_proposal(p, config, d_values, proposal_seed(config, i))))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdcRow {
    pub id: String,
    pub dao: String,
    pub voters: usize,
    pub mdc: Option<usize>,
    pub error: Option<String>,
}

pub fn run_mdc(proposals: &[Proposal]) -> Vec<MdcRow> {
    proposals
        .par_iter()
        .map(|p| {
            let m = mdc(&p.transcript);
            MdcRow {
                id: p.id().to_string(),
                dao: p.dao.clone(),
                voters: p.transcript.len(),
                error: m.as_ref().err().map(ToString::to_string),
                mdc: m.ok(),
            }
        })
        .collect()
}

/// Cohort label used to stratify results by MDC.
pub fn mdc_cohort(mdc: usize) -> &'static str {
    match mdc {
        0 => "0",
        1 => "1",
        2 => "2",
        3 | 4 => "3-4",
        _ => "5+",
    }
}
