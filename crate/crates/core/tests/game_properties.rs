//! Bribery game and B-privacy properties checked against exact enumeration.

use bpriv_core::game::{
    bribe_margin, exact_pivotality, exact_success_probability, pivotality_map, solve_equilibrium,
    success_probability, EquilibriumOptions, MonteCarloSpec, TallyPolicy, UtilityModel,
};
use bpriv_core::noise::NoiseSpec;
use bpriv_core::optimizer::{compute_bprivacy, BPrivacyConfig};
use bpriv_core::{VotingTranscript, NO, YES};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn margins_are_ordered(delta in 0.0f64..=1.0, w in 0.001f64..100.0, b in 0.001f64..100.0) {
        let winner = bribe_margin(&TallyPolicy::WinnerOnly, delta, w).unwrap();
        let noise = NoiseSpec::with_scale(b).unwrap();
        let noised = bribe_margin(&TallyPolicy::CorrectedNoised { noise }, delta, w).unwrap();
        let full = bribe_margin(&TallyPolicy::FullDisclosure, delta, w).unwrap();
        prop_assert!(winner <= noised + 1e-15);
        prop_assert!(noised <= full + 1e-15);
        prop_assert_eq!(full, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_matches_enumeration(
        voters in prop::collection::vec((0.1f64..5.0, 0.05f64..0.95), 2..10),
        seed in 0u64..1000,
    ) {
        let (w, p): (Vec<f64>, Vec<f64>) = voters.into_iter().unzip();
        let mc = MonteCarloSpec { samples: 4000, ..MonteCarloSpec::with_seed(seed) };
        let exact = exact_success_probability(&w, &p).unwrap();
        let est = success_probability(&w, &p, &mc, None);
        let se = (exact * (1.0 - exact) / mc.samples as f64).sqrt().max(1e-3);
        prop_assert!((est.p_succ - exact).abs() <= 4.0 * se, "{} vs {exact}", est.p_succ);
        let delta = pivotality_map(&w, &p, &mc);
        let exact_delta = exact_pivotality(&w, &p).unwrap();
        for (a, b) in delta.iter().zip(&exact_delta) {
            let se = (b * (1.0 - b) / mc.samples as f64).sqrt().max(1e-3);
            prop_assert!((a - b).abs() <= 4.0 * se, "{a} vs {b}");
        }
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_exact_pivotality() {
    let w = [3.0, 2.0, 2.0, 1.0, 1.0];
    let utility = UtilityModel::new(vec![1.0, 1.0, -1.0, 1.0, -1.0], 1.0).unwrap();
    let bribes = [0.5, 0.3, 0.0, 0.2, 0.0];
    let mc = MonteCarloSpec {
        samples: 20_000,
        ..MonteCarloSpec::with_seed(17)
    };
    let eq = solve_equilibrium(&w, &utility, &bribes, &TallyPolicy::WinnerOnly, &mc, &EquilibriumOptions::default())
        .unwrap();
    assert!(eq.converged);
    let exact = exact_pivotality(&w, &eq.yes_prob).unwrap();
    for (a, b) in eq.pivotality.iter().zip(&exact) {
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }
}

#[test]
fn b_privacy_rises_as_less_is_published() {
    let t = VotingTranscript::from_decimals(
        "small",
        2,
        0,
        &[("3", NO), ("2", NO), ("2", YES), ("1", NO), ("1", YES), ("1", NO)],
    )
    .unwrap();
    let utility = UtilityModel::from_transcript(&t, 1.0).unwrap();
    let config = BPrivacyConfig {
        mc: MonteCarloSpec::with_seed(99),
        ..BPrivacyConfig::default()
    };
    let noise = NoiseSpec::with_scale(1.0).unwrap();
    let budget = |policy: TallyPolicy| compute_bprivacy(&t, &utility, &policy, &config).unwrap().budget;
    let public = budget(TallyPolicy::FullDisclosure);
    let noised = budget(TallyPolicy::CorrectedNoised { noise });
    let winner = budget(TallyPolicy::WinnerOnly);
    assert!(public <= noised * 1.05, "{public} {noised}");
    assert!(noised <= winner * 1.05, "{noised} {winner}");
}
