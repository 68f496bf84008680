//! Labeling invariants and the live-label oracle, on generated experiments.

mod common;

use common::{live_oracle, random_trace};
use fairpi_core::labeling::{
    all_labels, conflict_free, label_occurrences, label_term, live_labels, tau_steps, unlabel,
    well_formed, Label, LabeledTerm,
};
use fairpi_core::random::TermGenerator;
use fairpi_core::syntax::{parse_labeled, Process};
use proptest::prelude::*;

fn experiment(seed: u64) -> LabeledTerm {
    let mut g = TermGenerator::with_seed(seed);
    let p = Process::par(g.process(), g.observer());
    label_term(&p, &Label::root())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn labeling_is_well_formed_and_erasable(seed in any::<u64>()) {
        let mut g = TermGenerator::with_seed(seed);
        let p = g.process();
        let e = label_term(&p, &Label::root());
        prop_assert!(well_formed(&e));
        prop_assert_eq!(unlabel(&e), p);
    }

    #[test]
    fn labeled_terms_print_and_parse_back(seed in any::<u64>()) {
        let e = experiment(seed);
        prop_assert_eq!(parse_labeled(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn invariants_hold_along_random_traces(seed in any::<u64>()) {
        let visited = random_trace(&experiment(seed), 12, seed);
        prop_assert!(visited.is_ok(), "{}", visited.unwrap_err());
        for state in visited.unwrap() {
            prop_assert!(well_formed(&state));
        }
    }

    #[test]
    fn live_labels_agree_with_the_rule_oracle(seed in any::<u64>()) {
        for state in random_trace(&experiment(seed), 8, seed ^ 1).unwrap() {
            prop_assert_eq!(live_labels(&state), live_oracle(&state), "at {}", state);
        }
    }

    #[test]
    fn fired_sets_are_conflict_free_and_present(seed in any::<u64>()) {
        for state in random_trace(&experiment(seed), 8, seed ^ 2).unwrap() {
            let present = all_labels(&state);
            for t in tau_steps(&state) {
                prop_assert!(!t.fired.is_empty() && t.fired.len() <= 2);
                prop_assert!(t.fired.is_subset(&present));
                let fired: Vec<&Label> = t.fired.iter().collect();
                if let [x, y] = fired[..] {
                    prop_assert!(conflict_free(&[x.clone()].into(), &[y.clone()].into()));
                }
            }
        }
    }
}

#[test]
fn labels_of_a_fresh_labeling_are_distinct() {
    for seed in 0..100 {
        let e = experiment(seed);
        let occ = label_occurrences(&e);
        assert_eq!(occ.len(), all_labels(&e).len(), "seed {seed}");
    }
}

#[test]
fn replication_fires_on_behalf_of_its_own_label() {
    let e = parse_labeled("!@,0 (nu b)(b<u> | b(x))").unwrap();
    let live = live_labels(&e);
    assert_eq!(live.len(), 1);
    assert_eq!(live, live_oracle(&e));
    let steps = tau_steps(&e);
    assert_eq!(steps.len(), 1);
    assert!(all_labels(&steps[0].target)
        .iter()
        .all(|l| !steps[0].fired.contains(l)));
}
