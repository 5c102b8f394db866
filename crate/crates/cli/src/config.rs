//! Run configuration: defaults, then a TOML or JSON file, then flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bpriv_core::optimizer::{AllocationKind, AllocationStrategy, TargetRule};
use bpriv_core::weight::DEFAULT_SCALE;
use serde::{Deserialize, Serialize};

/// Which allocation strategies the budget search tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategySet {
    /// The eight strategies of the main experiments.
    Default,
    /// Every allocation kind crossed with every target rule.
    Extended,
}

impl StrategySet {
    pub fn strategies(self) -> Vec<AllocationStrategy> {
        match self {
            StrategySet::Default => AllocationStrategy::defaults(),
            StrategySet::Extended => {
                let kinds = [
                    AllocationKind::EqualSplit,
                    AllocationKind::Linear,
                    AllocationKind::SquareRoot,
                    AllocationKind::Quadratic,
                    AllocationKind::Logarithmic,
                ];
                let rules = [
                    TargetRule::AllOpposing,
                    TargetRule::TopK { k: 10 },
                    TargetRule::TopFraction { fraction: 0.10 },
                    TargetRule::TopFraction { fraction: 0.01 },
                    TargetRule::TopMdc,
                ];
                kinds
                    .iter()
                    .flat_map(|&k| rules.iter().map(move |&r| AllocationStrategy::new(k, r)))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Decimal places of the input weights.
    pub scale: u32,
    pub perturbation_d: f64,
    pub frequency_q: f64,
    pub target_p: f64,
    pub sigma: f64,
    pub mc_samples: usize,
    pub escalated_samples: usize,
    pub subset_sum_cap: usize,
    pub noised_trials: usize,
    pub strategy_set: StrategySet,
    /// Choice index that denotes abstention; those voters are dropped.
    pub abstain_choice: Option<usize>,
    /// Proposals with more voters are excluded from B-privacy runs.
    pub max_voters: usize,
    pub max_budget: f64,
    /// Perturbations evaluated by `sweep`.
    pub sweep_d: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            scale: DEFAULT_SCALE,
            perturbation_d: 0.1,
            frequency_q: 0.95,
            target_p: 0.9,
            sigma: 1.0,
            mc_samples: 1000,
            escalated_samples: 10_000,
            subset_sum_cap: 45,
            noised_trials: 10,
            strategy_set: StrategySet::Default,
            abstain_choice: None,
            max_voters: 30_000,
            max_budget: 1e9,
            sweep_d: vec![0.0, 0.02, 0.05, 0.1, 0.3, 1.0],
        }
    }
}

impl RunConfig {
    /// Reads a partial configuration; missing keys keep their defaults.
    /// Files ending in `.json` are JSON, anything else TOML.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing JSON config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing TOML config {}", path.display()))?
        };
        Ok(config)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.perturbation_d >= 0.0) {
            bail!("perturbation_d must be non-negative, got {}", self.perturbation_d);
        }
        if !(self.frequency_q > 0.0 && self.frequency_q < 1.0) {
            bail!("frequency_q must lie in (0, 1), got {}", self.frequency_q);
        }
        if !(self.target_p > 0.5 && self.target_p < 1.0) {
            bail!("target_p must lie in (0.5, 1), got {}", self.target_p);
        }
        if !(self.sigma > 0.0) {
            bail!("sigma must be positive, got {}", self.sigma);
        }
        if self.mc_samples == 0 {
            bail!("mc_samples must be positive");
        }
        if self.noised_trials == 0 {
            bail!("noised_trials must be positive");
        }
        if self.sweep_d.iter().any(|d| !(*d >= 0.0)) {
            bail!("sweep_d values must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_match_documented_parameters() {
        let c = RunConfig::default();
        assert_eq!((c.frequency_q, c.target_p, c.sigma), (0.95, 0.9, 1.0));
        assert_eq!((c.mc_samples, c.subset_sum_cap, c.noised_trials), (1000, 45, 10));
        assert_eq!(c.max_voters, 30_000);
        c.validate().unwrap();
        assert_eq!(StrategySet::Default.strategies().len(), 8);
        assert_eq!(StrategySet::Extended.strategies().len(), 25);
    }

    #[test]
    fn partial_files_keep_defaults() {
        let mut toml_file = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(toml_file, "seed = 7\nperturbation_d = 0.3").unwrap();
        let c = RunConfig::from_file(toml_file.path()).unwrap();
        assert_eq!((c.seed, c.perturbation_d, c.mc_samples), (7, 0.3, 1000));

        let mut json_file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(json_file, r#"{{"strategy_set": "extended", "abstain_choice": 2}}"#).unwrap();
        let c = RunConfig::from_file(json_file.path()).unwrap();
        assert_eq!(c.strategy_set, StrategySet::Extended);
        assert_eq!(c.abstain_choice, Some(2));

        let mut bad = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(bad, "sed = 7").unwrap();
        assert!(RunConfig::from_file(bad.path()).is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        for c in [
            RunConfig { frequency_q: 1.0, ..Default::default() },
            RunConfig { target_p: 0.4, ..Default::default() },
            RunConfig { sigma: 0.0, ..Default::default() },
            RunConfig { perturbation_d: -0.1, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }
}
