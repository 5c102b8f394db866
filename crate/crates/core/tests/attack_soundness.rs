//! Attacks against an independent exhaustive oracle, for any number of
//! choices.

use std::collections::BTreeMap;

use bpriv_core::attacks::{noised_whale_attack, unified_attack, whale_attack};
use bpriv_core::Weight;
use proptest::prelude::*;

/// Voters whose choice is the same in every assignment reproducing `tally`.
fn consensus(weights: &[u128], tally: &[u128], k: usize) -> BTreeMap<usize, usize> {
    let n = weights.len();
    let mut seen = vec![vec![false; k]; n];
    let mut assignment = vec![0usize; n];
    for code in 0..(k as u64).pow(n as u32) {
        let mut c = code;
        for a in assignment.iter_mut() {
            *a = (c % k as u64) as usize;
            c /= k as u64;
        }
        let mut sums = vec![0u128; k];
        for (w, &a) in weights.iter().zip(&assignment) {
            sums[a] += w;
        }
        if sums == tally {
            for (s, &a) in seen.iter_mut().zip(&assignment) {
                s[a] = true;
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let opts: Vec<usize> = (0..k).filter(|&c| s[c]).collect();
            (opts.len() == 1).then(|| (i, opts[0]))
        })
        .collect()
}

fn instance() -> impl Strategy<Value = (Vec<u128>, Vec<usize>, usize)> {
    (2usize..=3, 1usize..=8).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(1u128..=12, n),
            prop::collection::vec(0..k, n),
            Just(k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn unified_attack_equals_the_oracle((weights, choices, k) in instance()) {
        let mut tally = vec![0u128; k];
        for (w, &c) in weights.iter().zip(&choices) {
            tally[c] += w;
        }
        let ws: Vec<Weight> = weights.iter().map(|&w| Weight::from_units(w)).collect();
        let tw: Vec<Weight> = tally.iter().map(|&w| Weight::from_units(w)).collect();
        let r = unified_attack(&ws, &tw, k, 45).unwrap();
        let oracle = consensus(&weights, &tally, k);
        // with more than two choices the subset-sum stage may stop short of
        // the oracle, but whatever it determines must be in the consensus
        if k == 2 {
            prop_assert_eq!(&r.determined, &oracle);
        }
        for (i, c) in &r.determined {
            prop_assert_eq!(oracle.get(i), Some(c));
            prop_assert_eq!(choices[*i], *c);
        }
        let whale = whale_attack(&ws, &tw, k).unwrap();
        for (i, c) in &whale.determined {
            prop_assert_eq!(choices[*i], *c);
        }
        prop_assert!(whale.determined.len() <= r.determined.len());
    }

    #[test]
    fn noised_whale_attack_is_sound_within_the_bound(
        (weights, choices, k) in instance(),
        noise in prop::collection::vec(-1.0f64..1.0, 3),
        d in 0.0f64..0.5,
    ) {
        let w: Vec<f64> = weights.iter().map(|&x| x as f64).collect();
        let total: f64 = w.iter().sum();
        let mut tally = vec![0.0; k];
        for (x, &c) in w.iter().zip(&choices) {
            tally[c] += x;
        }
        // perturbations stay within the calibrated bound d * W
        let noised: Vec<f64> = tally.iter().zip(&noise).map(|(t, e)| t + e * d * total).collect();
        let r = noised_whale_attack(&w, &noised, None, d, total, k).unwrap();
        for (i, c) in &r.determined {
            prop_assert_eq!(choices[*i], *c);
        }
    }
}
