// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use proptest::prelude::*;
use spectra_lab::diagnosis::{accuracy, suspects};
use spectra_lab::spectrum::Spectrum;

const N: usize = 8;

fn arb_set() -> impl Strategy<Value = Vec<Spectrum>> {
    prop::collection::vec(prop::collection::vec(prop_oneof![3 => Just(0u8), 1 => 1u8..=127], N), 1..6).prop_map(
        |rows| rows.into_iter().enumerate().map(|(i, c)| Spectrum::from_counts(i as u32, 0, c).unwrap()).collect(),
    )
}

fn brute_force(pass: &[Spectrum], fail: &[Spectrum]) -> BTreeSet<u32> {
    (0..N)
        .filter(|&id| fail.iter().any(|s| s.counters()[id] > 0) && pass.iter().all(|s| s.counters()[id] == 0))
        .map(|id| id as u32)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn suspects_match_brute_force(pass in arb_set(), fail in arb_set()) {
        let r = suspects(&pass, &fail).unwrap();
        prop_assert_eq!(r.fail_only_ids(), brute_force(&pass, &fail));
        prop_assert_eq!(r.pass_only_ids(), brute_force(&fail, &pass));
        prop_assert!(r.fail_only_ids().is_disjoint(&r.pass_only_ids()));
        for s in &r.fail_only {
            let active = fail.iter().filter(|f| f.counters()[s.id as usize] > 0).count();
            prop_assert_eq!(s.evidence, active);
        }
        for w in r.fail_only.windows(2) {
            prop_assert!(w[0].evidence > w[1].evidence || (w[0].evidence == w[1].evidence && w[0].id < w[1].id));
        }
    }

    #[test]
    fn adding_pass_spectra_never_grows_suspects(pass in arb_set(), fail in arb_set(), extra in arb_set()) {
        let before = suspects(&pass, &fail).unwrap().fail_only_ids();
        let mut more = pass.clone();
        more.extend(extra);
        let after = suspects(&more, &fail).unwrap().fail_only_ids();
        prop_assert!(after.is_subset(&before));
    }

    #[test]
    fn swapping_roles_swaps_sets(pass in arb_set(), fail in arb_set()) {
        let r = suspects(&pass, &fail).unwrap();
        let s = suspects(&fail, &pass).unwrap();
        prop_assert_eq!(r.fail_only, s.pass_only);
        prop_assert_eq!(r.pass_only, s.fail_only);
    }

    #[test]
    fn only_hit_sets_matter(pass in arb_set(), fail in arb_set(), replacement in 1u8..=127) {
        let remap = |set: &[Spectrum]| -> Vec<Spectrum> {
            set.iter()
                .map(|s| {
                    let c = s.counters().iter().map(|&c| if c > 0 { replacement } else { 0 }).collect();
                    Spectrum::from_counts(s.epoch_seq, s.start_time, c).unwrap()
                })
                .collect()
        };
        let a = suspects(&pass, &fail).unwrap();
        let b = suspects(&remap(&pass), &remap(&fail)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn accuracy_is_a_fraction(pass in arb_set(), fail in arb_set(), truth in prop::collection::btree_set(0u32..N as u32, 0..4)) {
        let r = suspects(&pass, &fail).unwrap();
        match accuracy(&r, &truth) {
            None => prop_assert!(r.fail_only.is_empty()),
            Some(a) => {
                let s = r.fail_only_ids();
                prop_assert_eq!(a, s.intersection(&truth).count() as f64 / s.len() as f64);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
