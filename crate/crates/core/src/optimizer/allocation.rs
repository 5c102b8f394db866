use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to `ln w` so light voters keep a small positive share.
pub const LOG_WEIGHT_FLOOR: f64 = 1e-6;

/// How a budget is split over the target set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AllocationKind {
    EqualSplit,
    Linear,
    SquareRoot,
    Quadratic,
    Logarithmic,
    /// `b_i = s * w_i + c` with `c` fixed by the budget.
    LinearSloped { slope: f64 },
}

/// Which opposing voters receive bribes, ranked by weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TargetRule {
    AllOpposing,
    TopK { k: usize },
    /// The heaviest `ceil(fraction * n)` opposing voters, at least one.
    TopFraction { fraction: f64 },
    /// As many of the heaviest opposing voters as the proposal's MDC.
    TopMdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationStrategy {
    pub kind: AllocationKind,
    pub target: TargetRule,
}

impl AllocationStrategy {
    pub const fn new(kind: AllocationKind, target: TargetRule) -> Self {
        AllocationStrategy { kind, target }
    }

    /// Linear over all, the 10 heaviest, the top 10% and the top 1%;
    /// logarithmic over the top MDC and the top 1%; square root over all;
    /// equal split over the top MDC.
    pub fn defaults() -> Vec<AllocationStrategy> {
        use AllocationKind::*;
        use TargetRule::*;
        vec![
            Self::new(Linear, AllOpposing),
            Self::new(Linear, TopK { k: 10 }),
            Self::new(Linear, TopFraction { fraction: 0.10 }),
            Self::new(Linear, TopFraction { fraction: 0.01 }),
            Self::new(Logarithmic, TopMdc),
            Self::new(Logarithmic, TopFraction { fraction: 0.01 }),
            Self::new(SquareRoot, AllOpposing),
            Self::new(EqualSplit, TopMdc),
        ]
    }
}

impl fmt::Display for AllocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationKind::EqualSplit => f.write_str("equal"),
            AllocationKind::Linear => f.write_str("linear"),
            AllocationKind::SquareRoot => f.write_str("sqrt"),
            AllocationKind::Quadratic => f.write_str("quadratic"),
            AllocationKind::Logarithmic => f.write_str("log"),
            AllocationKind::LinearSloped { slope } => write!(f, "sloped({slope})"),
        }
    }
}

impl fmt::Display for TargetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetRule::AllOpposing => f.write_str("all"),
            TargetRule::TopK { k } => write!(f, "top{k}"),
            TargetRule::TopFraction { fraction } => write!(f, "top{}%", fraction * 100.0),
            TargetRule::TopMdc => f.write_str("top-mdc"),
        }
    }
}

impl fmt::Display for AllocationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.target)
    }
}

/// Opposing voters selected by `rule`, heaviest first, ties by index.
pub fn select_targets(rule: &TargetRule, weights: &[f64], opposing: &[usize], mdc: usize) -> Result<Vec<usize>> {
    let mut ranked = opposing.to_vec();
    ranked.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    ranked.dedup();
    let keep = match *rule {
        TargetRule::AllOpposing => ranked.len(),
        TargetRule::TopK { k } => k,
        TargetRule::TopFraction { fraction } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::param("fraction", format!("{fraction} is outside (0, 1]")));
            }
            ((fraction * ranked.len() as f64).ceil() as usize).max(1)
        }
        TargetRule::TopMdc => mdc.max(1),
    };
    ranked.truncate(keep);
    Ok(ranked)
}

/// Splits `budget` over the targets of `strategy`. Every other voter gets
/// nothing and the bribes sum to `budget`.
pub fn allocate(
    strategy: &AllocationStrategy,
    weights: &[f64],
    opposing: &[usize],
    budget: f64,
    mdc: usize,
) -> Result<Vec<f64>> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::param("budget", format!("{budget} must be finite and non-negative")));
    }
    if let Some(&i) = opposing.iter().find(|&&i| i >= weights.len()) {
        return Err(Error::param("opposing", format!("{i} is not a voter")));
    }
    let mut bribes = vec![0.0; weights.len()];
    let targets = select_targets(&strategy.target, weights, opposing, mdc)?;
    if budget == 0.0 {
        return Ok(bribes);
    }
    if targets.is_empty() {
        return Err(Error::EmptyTargetSet { budget });
    }
    let k = targets.len() as f64;
    let scores: Vec<f64> = match strategy.kind {
        AllocationKind::EqualSplit => vec![1.0; targets.len()],
        AllocationKind::Linear => targets.iter().map(|&i| weights[i]).collect(),
        AllocationKind::SquareRoot => targets.iter().map(|&i| weights[i].sqrt()).collect(),
        AllocationKind::Quadratic => targets.iter().map(|&i| weights[i].powi(2)).collect(),
        AllocationKind::Logarithmic => targets.iter().map(|&i| weights[i].ln().max(LOG_WEIGHT_FLOOR)).collect(),
        AllocationKind::LinearSloped { slope } => {
            let sum: f64 = targets.iter().map(|&i| weights[i]).sum();
            let c = (budget - slope * sum) / k;
            targets.iter().map(|&i| (slope * weights[i] + c).max(0.0)).collect()
        }
    };
    let total: f64 = scores.iter().sum();
    for (&i, s) in targets.iter().zip(&scores) {
        bribes[i] = if total > 0.0 { budget * s / total } else { budget / k };
    }
    Ok(bribes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn examples() {
        let all = AllocationStrategy::new(AllocationKind::EqualSplit, TargetRule::AllOpposing);
        let b = allocate(&all, &[1.0, 2.0, 3.0, 4.0, 5.0], &[0, 1, 2, 3, 4], 10.0, 1).unwrap();
        assert!(close(&b, &[2.0; 5]));
        let lin = AllocationStrategy::new(AllocationKind::Linear, TargetRule::AllOpposing);
        assert!(close(&allocate(&lin, &[3.0, 1.0], &[0, 1], 8.0, 1).unwrap(), &[6.0, 2.0]));
        let quad = AllocationStrategy::new(AllocationKind::Quadratic, TargetRule::AllOpposing);
        assert!(close(&allocate(&quad, &[3.0, 1.0], &[0, 1], 10.0, 1).unwrap(), &[9.0, 1.0]));
    }

    #[test]
    fn non_targets_get_nothing() {
        let lin = AllocationStrategy::new(AllocationKind::Linear, TargetRule::TopK { k: 2 });
        let b = allocate(&lin, &[5.0, 1.0, 4.0, 3.0], &[1, 2, 3], 7.0, 1).unwrap();
        assert!(close(&b, &[0.0, 0.0, 4.0, 3.0]));
    }

    #[test]
    fn ranking_ties_go_to_lower_index() {
        let t = select_targets(&TargetRule::TopK { k: 2 }, &[1.0, 2.0, 2.0, 2.0], &[3, 2, 1, 0], 0).unwrap();
        assert_eq!(t, vec![1, 2]);
        let t = select_targets(&TargetRule::TopFraction { fraction: 0.01 }, &[1.0; 150], &(0..150).collect::<Vec<_>>(), 0)
            .unwrap();
        assert_eq!(t, vec![0, 1]);
        let t = select_targets(&TargetRule::TopMdc, &[1.0, 3.0], &[0, 1], 0).unwrap();
        assert_eq!(t, vec![1]);
    }

    #[test]
    fn logarithmic_floors_light_voters() {
        let log = AllocationStrategy::new(AllocationKind::Logarithmic, TargetRule::AllOpposing);
        let b = allocate(&log, &[0.5, std::f64::consts::E], &[0, 1], 1.0, 1).unwrap();
        assert!((b[0] - 1e-6 / (1.0 + 1e-6)).abs() < 1e-15);
        let b = allocate(&log, &[0.5, 0.2], &[0, 1], 1.0, 1).unwrap();
        assert!(close(&b, &[0.5, 0.5]));
    }

    #[test]
    fn sloped_clamps_and_renormalizes() {
        let s = AllocationStrategy::new(AllocationKind::LinearSloped { slope: 1.0 }, TargetRule::AllOpposing);
        // c = (4 - 12) / 2 = -4: (6, -2) clamps to (6, 0), renormalized to (4, 0)
        assert!(close(&allocate(&s, &[10.0, 2.0], &[0, 1], 4.0, 1).unwrap(), &[4.0, 0.0]));
        // c = (20 - 12) / 2 = 4: (14, 6)
        assert!(close(&allocate(&s, &[10.0, 2.0], &[0, 1], 20.0, 1).unwrap(), &[14.0, 6.0]));
    }

    #[test]
    fn errors() {
        let lin = AllocationStrategy::new(AllocationKind::Linear, TargetRule::AllOpposing);
        assert!(matches!(allocate(&lin, &[1.0], &[], 1.0, 1), Err(Error::EmptyTargetSet { .. })));
        assert_eq!(allocate(&lin, &[1.0], &[], 0.0, 1).unwrap(), vec![0.0]);
        assert!(allocate(&lin, &[1.0], &[0], -1.0, 1).is_err());
        assert!(allocate(&lin, &[1.0], &[3], 1.0, 1).is_err());
    }

    fn kinds() -> impl Strategy<Value = AllocationKind> {
        prop_oneof![
            Just(AllocationKind::EqualSplit),
            Just(AllocationKind::Linear),
            Just(AllocationKind::SquareRoot),
            Just(AllocationKind::Quadratic),
            Just(AllocationKind::Logarithmic),
            (-2.0f64..2.0).prop_map(|slope| AllocationKind::LinearSloped { slope }),
        ]
    }

    fn rules() -> impl Strategy<Value = TargetRule> {
        prop_oneof![
            Just(TargetRule::AllOpposing),
            (1usize..12).prop_map(|k| TargetRule::TopK { k }),
            (0.001f64..1.0).prop_map(|fraction| TargetRule::TopFraction { fraction }),
            Just(TargetRule::TopMdc),
        ]
    }

    proptest! {
        #[test]
        fn budget_is_conserved(
            weights in proptest::collection::vec(0.001f64..1000.0, 1..40),
            mask in any::<u64>(),
            kind in kinds(),
            rule in rules(),
            budget in 0.0f64..1e6,
            mdc in 0usize..6,
        ) {
            let opposing: Vec<usize> = (0..weights.len()).filter(|i| mask >> (i % 64) & 1 == 1).collect();
            prop_assume!(!opposing.is_empty());
            let b = allocate(&AllocationStrategy::new(kind, rule), &weights, &opposing, budget, mdc).unwrap();
            let sum: f64 = b.iter().sum();
            prop_assert!((sum - budget).abs() <= 1e-9 * budget.max(1.0));
            for (i, x) in b.iter().enumerate() {
                prop_assert!(*x >= 0.0);
                if !opposing.contains(&i) {
                    prop_assert_eq!(*x, 0.0);
                }
            }
        }
    }
}
