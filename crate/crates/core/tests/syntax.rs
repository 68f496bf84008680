//! Properties of the term language: printing, canonical forms and
//! substitution, checked on generated terms.

use std::collections::BTreeSet;

use fairpi_core::lts::{step_with, Action};
use fairpi_core::random::{Shape, TermGenerator};
use fairpi_core::syntax::{canonicalize, parse_observer, parse_process, substitute, Name, Process};
use proptest::prelude::*;

fn generated(seed: u64, observer: bool) -> Process {
    let mut g = TermGenerator::with_seed(seed);
    if observer {
        g.observer()
    } else {
        g.process()
    }
}

/// Transitions of `p` as (action shape, canonical target), with the object
/// of a bound output renamed to one fixed name so that the choice of fresh
/// name does not matter.
fn moves(p: &Process, candidates: &BTreeSet<Name>) -> Vec<(String, Process)> {
    let fixed = Name::new("extruded");
    let mut out: Vec<(String, Process)> = step_with(p, candidates)
        .into_iter()
        .map(|(action, target)| match &action {
            Action::BoundOutput { chan, object } => {
                (format!("{chan}(^)"), substitute(&target, object, &fixed))
            }
            other => (format!("{other:?}"), target),
        })
        .collect();
    out.sort_by_key(|(a, t)| (a.clone(), canonicalize(t).key().to_string()));
    out
}

/// Whether `p` and `q` have the same transitions up to canonical form, to
/// the given depth; wide nodes (replicated inputs offer one transition per
/// candidate name) are compared one level only.
fn same_transitions(p: &Process, q: &Process, candidates: &BTreeSet<Name>, depth: usize) -> bool {
    let (mp, mq) = (moves(p, candidates), moves(q, candidates));
    let keys = |m: &[(String, Process)]| -> Vec<(String, String)> {
        m.iter()
            .map(|(a, t)| (a.clone(), canonicalize(t).key().to_string()))
            .collect()
    };
    if keys(&mp) != keys(&mq) {
        return false;
    }
    depth == 0
        || mp.len() > WIDE
        || mp
            .iter()
            .zip(&mq)
            .all(|((_, tp), (_, tq))| same_transitions(tp, tq, candidates, depth - 1))
}

/// Branching above which [`same_transitions`] stops descending.
const WIDE: usize = 24;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>(), observer in any::<bool>()) {
        let p = generated(seed, observer);
        prop_assert_eq!(parse_observer(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn canonicalization_is_idempotent(seed in any::<u64>(), observer in any::<bool>()) {
        let p = generated(seed, observer);
        let once = canonicalize(&p);
        let twice = canonicalize(once.term());
        prop_assert_eq!(once.key(), twice.key());
    }

    #[test]
    fn canonical_key_survives_a_print_parse_round_trip(seed in any::<u64>()) {
        let p = generated(seed, false);
        let key = canonicalize(&p).key().to_string();
        let reparsed = parse_process(&canonicalize(&p).term().to_string()).unwrap();
        let again = canonicalize(&reparsed);
        prop_assert_eq!(again.key(), key.as_str());
    }

    #[test]
    fn parallel_composition_is_commutative_up_to_canonical_form(a in any::<u64>(), b in any::<u64>()) {
        let (p, q) = (generated(a, false), generated(b, false));
        let left = canonicalize(&Process::par(p.clone(), q.clone()));
        let right = canonicalize(&Process::par(q, p));
        prop_assert_eq!(left.key(), right.key());
    }

    #[test]
    fn substitution_never_captures(seed in any::<u64>(), from in 0usize..3, to in 0usize..4) {
        let p = generated(seed, false);
        let names = ["a", "b", "c", "x0"];
        let (x, y) = (Name::new(names[from]), Name::new(names[to]));
        let mut expected = p.free_names();
        if expected.remove(&x) {
            expected.insert(y.clone());
        }
        prop_assert_eq!(substitute(&p, &x, &y).free_names(), expected);
    }

    #[test]
    fn canonical_form_has_the_same_transitions(seed in any::<u64>()) {
        let p = generated(seed, false);
        let canonical = canonicalize(&p).term().as_ref().clone();
        let mut candidates = p.free_names();
        candidates.insert(Name::new("fresh"));
        prop_assert!(same_transitions(&p, &canonical, &candidates, 2));
    }
}

#[test]
fn alpha_equivalent_terms_share_a_key() {
    let pairs = [
        ("(nu a)(a<b> | a(x).x<c>)", "(nu d)(d<b> | d(y).y<c>)"),
        ("!c(x).(nu z)x<z>", "!c(y).(nu q)y<q>"),
        ("a<b> | c<d> | 0", "c<d> | (a<b> | 0)"),
    ];
    for (l, r) in pairs {
        let (l, r) = (parse_process(l).unwrap(), parse_process(r).unwrap());
        assert_eq!(canonicalize(&l).key(), canonicalize(&r).key(), "{l} vs {r}");
    }
    let distinct = [("a(x).x<b>", "a(x).b<x>"), ("(nu a)a<b>", "a<b>")];
    for (l, r) in distinct {
        let (l, r) = (parse_process(l).unwrap(), parse_process(r).unwrap());
        assert_ne!(canonicalize(&l).key(), canonicalize(&r).key(), "{l} vs {r}");
    }
}

#[test]
fn generated_terms_respect_the_shape() {
    let shape = Shape::default();
    for seed in 0..200 {
        let mut g = TermGenerator::new(seed, shape);
        let p = g.process();
        assert!(!p.mentions_success());
        let o = g.observer();
        assert!(o.mentions_success());
    }
}
