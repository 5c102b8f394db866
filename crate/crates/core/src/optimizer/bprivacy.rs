use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    solve_equilibrium_with, success_probability_with, EquilibriumOptions, MonteCarloSpec, TallyPolicy, UniformBank,
    UtilityModel,
};
use crate::rng;
use crate::transcript::VotingTranscript;

use super::allocation::{allocate, AllocationStrategy};
use super::mdc::mdc;

/// Seed label of the success-probability banks.
const SUCCESS_LABEL: u64 = 0x5_0CCE55;

/// Budget search: doubling from `initial`, then bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectSpec {
    pub initial: f64,
    pub max_budget: f64,
    /// Stop once `(hi - lo) / hi` falls below this.
    pub relative_tolerance: f64,
    /// Halvings allowed when the initial budget already succeeds.
    pub max_halvings: usize,
}

impl Default for BisectSpec {
    fn default() -> Self {
        BisectSpec {
            initial: 1.0,
            max_budget: 1e9,
            relative_tolerance: 1e-2,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BPrivacyConfig {
    pub target_p: f64,
    pub strategies: Vec<AllocationStrategy>,
    pub mc: MonteCarloSpec,
    pub equilibrium: EquilibriumOptions,
    pub search: BisectSpec,
}

impl Default for BPrivacyConfig {
    fn default() -> Self {
        BPrivacyConfig {
            target_p: 0.9,
            strategies: AllocationStrategy::defaults(),
            mc: MonteCarloSpec::default(),
            equilibrium: EquilibriumOptions::default(),
            search: BisectSpec::default(),
        }
    }
}

/// One evaluated budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub budget: f64,
    pub p_succ: f64,
    pub converged: bool,
}

/// Search outcome for one strategy; `budget` is `None` when the cap was hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySearch {
    pub strategy: AllocationStrategy,
    pub budget: Option<f64>,
    pub p_succ: f64,
    pub probes: Vec<Probe>,
    /// Probe pairs where a larger budget scored lower by more than twice the
    /// escalation band.
    pub monotonicity_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BPrivacyResult {
    pub budget: f64,
    pub bribes: Vec<f64>,
    pub strategy: AllocationStrategy,
    pub achieved_p_succ: f64,
    pub policy: TallyPolicy,
    pub relative: Option<f64>,
    pub mdc: usize,
    pub searches: Vec<StrategySearch>,
}

/// Evaluates success probability at equilibrium for a bribe vector, with
/// every random bank shared across budgets and strategies.
struct Evaluator<'a> {
    weights: Vec<f64>,
    utility: &'a UtilityModel,
    policy: &'a TallyPolicy,
    config: &'a BPrivacyConfig,
    opposing: Vec<usize>,
    mdc: usize,
    equilibrium_bank: UniformBank,
    success_bank: UniformBank,
    escalated_bank: OnceLock<UniformBank>,
}

impl Evaluator<'_> {
    fn bribes(&self, strategy: &AllocationStrategy, budget: f64) -> Result<Vec<f64>> {
        allocate(strategy, &self.weights, &self.opposing, budget, self.mdc)
    }

    fn probe(&self, strategy: &AllocationStrategy, budget: f64) -> Result<Probe> {
        let bribes = self.bribes(strategy, budget)?;
        let eq = solve_equilibrium_with(
            &self.equilibrium_bank,
            &self.weights,
            self.utility,
            &bribes,
            self.policy,
            &self.config.equilibrium,
        )?;
        let mc = &self.config.mc;
        let mut p_succ = success_probability_with(&self.success_bank, &self.weights, &eq.yes_prob).p_succ;
        if (p_succ - self.config.target_p).abs() <= mc.escalation_band && mc.escalated_samples > mc.samples {
            let big = self.escalated_bank.get_or_init(|| {
                let seed = rng::derive_seed(mc.seed, SUCCESS_LABEL + 1);
                UniformBank::new(self.weights.len(), mc.escalated_samples, seed, mc.antithetic)
            });
            p_succ = success_probability_with(big, &self.weights, &eq.yes_prob).p_succ;
        }
        Ok(Probe {
            budget,
            p_succ,
            converged: eq.converged,
        })
    }

    fn search(&self, strategy: &AllocationStrategy) -> Result<StrategySearch> {
        let target = self.config.target_p;
        let spec = &self.config.search;
        let mut probes = Vec::new();
        let mut run = |budget: f64| -> Result<bool> {
            let p = self.probe(strategy, budget)?;
            probes.push(p);
            Ok(p.p_succ >= target)
        };

        let mut budget = spec.initial;
        let (mut lo, mut hi);
        if run(budget)? {
            if run(0.0)? {
                return Ok(finish(strategy, Some(0.0), probes, target));
            }
            hi = budget;
            lo = 0.0;
            for _ in 0..spec.max_halvings {
                let next = hi / 2.0;
                if run(next)? {
                    hi = next;
                } else {
                    lo = next;
                    break;
                }
            }
        } else {
            lo = budget;
            loop {
                budget *= 2.0;
                if budget > spec.max_budget {
                    return Ok(finish(strategy, None, probes, target));
                }
                if run(budget)? {
                    hi = budget;
                    break;
                }
                lo = budget;
            }
        }
        while lo > 0.0 && (hi - lo) / hi > spec.relative_tolerance {
            let mid = 0.5 * (lo + hi);
            if run(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(finish(strategy, Some(hi), probes, target))
    }
}

fn finish(strategy: &AllocationStrategy, budget: Option<f64>, mut probes: Vec<Probe>, target: f64) -> StrategySearch {
    let p_succ = budget
        .and_then(|b| probes.iter().find(|p| p.budget == b))
        .map_or(0.0, |p| p.p_succ);
    probes.sort_by(|a, b| a.budget.total_cmp(&b.budget));
    let mut violations = 0;
    let mut best = f64::NEG_INFINITY;
    for p in &probes {
        if p.p_succ < best - 0.02 {
            violations += 1;
        }
        best = best.max(p.p_succ);
    }
    if violations > 0 {
        tracing::warn!(%strategy, violations, target, "success probability not monotone in budget");
    }
    StrategySearch {
        strategy: *strategy,
        budget,
        p_succ,
        probes,
        monotonicity_violations: violations,
    }
}

/// Minimum budget over the configured strategies for which the adversary's
/// success probability at equilibrium reaches `target_p`.
///
/// Bribes go to voters with positive utility mean (those opposing the
/// adversary). Strategies are searched independently and in parallel; the
/// result is the cheapest successful one, ties resolved by strategy order.
pub fn compute_bprivacy(
    t: &VotingTranscript,
    utility: &UtilityModel,
    policy: &TallyPolicy,
    config: &BPrivacyConfig,
) -> Result<BPrivacyResult> {
    if !t.is_binary() {
        return Err(Error::NotBinary {
            num_choices: t.num_choices(),
        });
    }
    if utility.len() != t.len() {
        return Err(Error::param("utility", format!("{} means for {} voters", utility.len(), t.len())));
    }
    if !(config.target_p > 0.0 && config.target_p < 1.0) {
        return Err(Error::param("target_p", format!("{} is outside (0, 1)", config.target_p)));
    }
    if config.strategies.is_empty() {
        return Err(Error::param("strategies", "none configured"));
    }
    let search = &config.search;
    if !(search.initial > 0.0 && search.max_budget >= search.initial && search.relative_tolerance > 0.0) {
        return Err(Error::param("search", format!("{search:?}")));
    }
    let n = t.len();
    let mc = &config.mc;
    let evaluator = Evaluator {
        weights: t.weights_f64(),
        utility,
        policy,
        config,
        opposing: utility.opposing(),
        mdc: mdc(t)?,
        equilibrium_bank: UniformBank::from_spec(n, mc),
        success_bank: UniformBank::new(n, mc.samples, rng::derive_seed(mc.seed, SUCCESS_LABEL), mc.antithetic),
        escalated_bank: OnceLock::new(),
    };
    let searches = config
        .strategies
        .par_iter()
        .map(|s| evaluator.search(s))
        .collect::<Result<Vec<_>>>()?;
    let best = searches
        .iter()
        .filter_map(|s| s.budget.map(|b| (b, s)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let Some((budget, winner)) = best else {
        return Err(Error::BudgetExhausted {
            max_budget: search.max_budget,
        });
    };
    Ok(BPrivacyResult {
        budget,
        bribes: evaluator.bribes(&winner.strategy, budget)?,
        strategy: winner.strategy,
        achieved_p_succ: winner.p_succ,
        policy: *policy,
        relative: None,
        mdc: evaluator.mdc,
        searches: searches.clone(),
    })
}

/// `B*_tally / B*_public`. A ratio below one is possible from sampling
/// noise and is logged.
pub fn relative_bprivacy(result: &BPrivacyResult, baseline_public: &BPrivacyResult) -> f64 {
    let ratio = result.budget / baseline_public.budget;
    if ratio < 1.0 {
        tracing::debug!(ratio, policy = result.policy.label(), "relative B-privacy below one");
    }
    ratio
}

/// Geometric mean of positive finite values; `None` when there are none.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = values.iter().filter(|v| **v > 0.0 && v.is_finite()).map(|v| v.ln()).collect();
    if logs.is_empty() {
        return None;
    }
    Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{std_normal_quantile, success_probability, solve_equilibrium};
    use crate::noise::NoiseSpec;
    use crate::optimizer::allocation::{AllocationKind, TargetRule};
    use crate::transcript::{NO, YES};

    fn single_voter() -> (VotingTranscript, UtilityModel) {
        let t = VotingTranscript::from_decimals("one", 2, 0, &[("1", NO)]).unwrap();
        let u = UtilityModel::from_transcript(&t, 1.0).unwrap();
        (t, u)
    }

    #[test]
    fn single_voter_closed_form() {
        let (t, u) = single_voter();
        let config = BPrivacyConfig::default();
        let expected = 1.0 + std_normal_quantile(0.9);
        let public = compute_bprivacy(&t, &u, &TallyPolicy::FullDisclosure, &config).unwrap();
        assert!((public.budget - expected).abs() < 0.02 * expected, "{}", public.budget);
        let winner = compute_bprivacy(&t, &u, &TallyPolicy::WinnerOnly, &config).unwrap();
        assert_eq!(public.budget, winner.budget);
        assert_eq!(relative_bprivacy(&winner, &public), 1.0);
        assert_eq!(relative_bprivacy(&public, &public), 1.0);
    }

    fn dispersed() -> (VotingTranscript, UtilityModel) {
        let ballots: Vec<(String, usize)> = (0..15)
            .map(|i| (format!("{}", 1 + (i * 7) % 5), if i % 3 == 0 { YES } else { NO }))
            .collect();
        let refs: Vec<(&str, usize)> = ballots.iter().map(|(w, c)| (w.as_str(), *c)).collect();
        let t = VotingTranscript::from_decimals("d", 2, 0, &refs).unwrap();
        let u = UtilityModel::from_transcript(&t, 1.0).unwrap();
        (t, u)
    }

    #[test]
    fn less_information_costs_more() {
        let (t, u) = dispersed();
        let config = BPrivacyConfig::default();
        let noise = NoiseSpec::with_scale(0.1 * t.total_weight_f64() / 20f64.ln()).unwrap();
        let public = compute_bprivacy(&t, &u, &TallyPolicy::FullDisclosure, &config).unwrap();
        let noised = compute_bprivacy(&t, &u, &TallyPolicy::CorrectedNoised { noise }, &config).unwrap();
        let winner = compute_bprivacy(&t, &u, &TallyPolicy::WinnerOnly, &config).unwrap();
        assert!(public.budget <= noised.budget * 1.05, "{} {}", public.budget, noised.budget);
        assert!(noised.budget <= winner.budget * 1.05, "{} {}", noised.budget, winner.budget);
        for r in [&public, &noised, &winner] {
            assert!(r.achieved_p_succ >= 0.9);
            assert!(r.searches.iter().all(|s| s.budget.is_none_or(|b| b >= r.budget)));
            let sum: f64 = r.bribes.iter().sum();
            assert!((sum - r.budget).abs() < 1e-9 * r.budget);
        }
    }

    #[test]
    fn returned_budget_is_feasible_under_fresh_randomness() {
        let (t, u) = dispersed();
        let config = BPrivacyConfig::default();
        let r = compute_bprivacy(&t, &u, &TallyPolicy::WinnerOnly, &config).unwrap();
        let check = MonteCarloSpec {
            samples: 10_000,
            seed: 4242,
            ..MonteCarloSpec::default()
        };
        let eq = solve_equilibrium(&t.weights_f64(), &u, &r.bribes, &r.policy, &check, &config.equilibrium).unwrap();
        let s = success_probability(&t.weights_f64(), &eq.yes_prob, &check, None);
        assert!(s.p_succ >= 0.9 - 0.01 - 3.0 * s.std_error, "{}", s.p_succ);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let (t, u) = single_voter();
        let config = BPrivacyConfig {
            search: BisectSpec {
                max_budget: 1.5,
                ..BisectSpec::default()
            },
            ..BPrivacyConfig::default()
        };
        assert!(matches!(
            compute_bprivacy(&t, &u, &TallyPolicy::FullDisclosure, &config),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let (t, u) = dispersed();
        let config = BPrivacyConfig {
            strategies: vec![AllocationStrategy::new(AllocationKind::Linear, TargetRule::AllOpposing)],
            ..BPrivacyConfig::default()
        };
        let a = compute_bprivacy(&t, &u, &TallyPolicy::WinnerOnly, &config).unwrap();
        let b = compute_bprivacy(&t, &u, &TallyPolicy::WinnerOnly, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn geometric_mean_examples() {
        assert_eq!(geometric_mean(&[]), None);
        assert!((geometric_mean(&[1.0, 4.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((geometric_mean(&[2.0, 0.0, 8.0]).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (t, u) = single_voter();
        let bad = BPrivacyConfig {
            target_p: 1.0,
            ..BPrivacyConfig::default()
        };
        assert!(compute_bprivacy(&t, &u, &TallyPolicy::FullDisclosure, &bad).is_err());
        let multi = VotingTranscript::from_decimals("m", 3, 0, &[("1", 2)]).unwrap();
        assert!(compute_bprivacy(&multi, &u, &TallyPolicy::FullDisclosure, &BPrivacyConfig::default()).is_err());
    }
}
