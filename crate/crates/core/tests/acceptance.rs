//! Acceptance run: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use common::{
    fair_by_paths, live_oracle, must_by_paths, named_experiments, random_trace, small_graph,
};
use fairpi_core::corpus::{load_corpus, run_corpus};
use fairpi_core::fairness::{
    run_scheduler, validate_certificate, Ending, FairnessClass, Mode, Policy,
};
use fairpi_core::labeling::{label_term, tau_steps, unlabel, Label, LabeledTerm};
use fairpi_core::lts::{step, Action, Caps};
use fairpi_core::random::TermGenerator;
use fairpi_core::syntax::{parse_observer, parse_process, Process};
use fairpi_core::verdicts::{
    check, check_bisim_bounded, revalidate, Exploration, Property, Verdict, VerdictKind,
};

use Property::{Fair, Must, StrongFairMust as Sf, WeakFairMust as Wf};
use VerdictKind::{Holds as H, Violated as V};

type Report = Result<String, String>;

type Criterion = Box<dyn FnOnce(&mut Produced) -> Report>;

/// Everything criterion 1 produced that later criteria re-examine.
#[derive(Default)]
struct Produced {
    verdicts: Vec<(String, Verdict)>,
    states: Vec<LabeledTerm>,
}

fn observer() -> Process {
    parse_observer("a(x).w").unwrap()
}

fn experiment_of(name: &str) -> Process {
    parse_process(named_experiments()[name]).unwrap()
}

fn verdict_table(produced: &mut Produced) -> Report {
    let table: [(&str, &[(Property, VerdictKind)]); 5] = [
        ("fair-not-must", &[(Must, V), (Fair, H), (Wf, H), (Sf, H)]),
        ("weakfair-gap", &[(Wf, V), (Sf, H)]),
        ("strongfair-gap", &[(Fair, H), (Sf, V), (Wf, V)]),
        ("impossibility-E", &[(Sf, H), (Wf, H)]),
        ("impossibility-F", &[(Sf, V), (Wf, V)]),
    ];
    let caps = Caps::default();
    let started = Instant::now();
    let mut mismatches = Vec::new();
    let mut count = 0;
    for (name, rows) in table {
        let p = experiment_of(name);
        for &(property, expected) in rows {
            let v = check(property, &p, &observer(), &caps);
            count += 1;
            if v.kind() != expected {
                mismatches.push(format!(
                    "{name} {property}: {} (expected {expected})",
                    v.kind()
                ));
            }
            produced.verdicts.push((name.to_string(), v));
        }
    }
    let (e, f) = (
        experiment_of("impossibility-E"),
        experiment_of("impossibility-F"),
    );
    for k in 1..=4 {
        count += 1;
        if !check_bisim_bounded(&e, &f, k, 64) {
            mismatches.push(format!("E and F not {k}-step bisimilar"));
        }
    }
    let elapsed = started.elapsed();
    for name in named_experiments().keys() {
        let x = Process::par(experiment_of(name), observer());
        produced.states.extend(Exploration::new(&x, &caps).states);
    }
    if mismatches.is_empty() {
        Ok(format!(
            "{count}/{count} verdicts and bisimilarity checks match in {:.1}s",
            elapsed.as_secs_f64()
        ))
    } else {
        Err(mismatches.join("; "))
    }
}

fn labeling_suite(produced: &mut Produced) -> Report {
    const PROCESSES: u64 = 1000;
    let mut violations = Vec::new();
    let mut states = 0;
    for seed in 0..PROCESSES {
        let p = TermGenerator::with_seed(seed).process();
        let start = label_term(&p, &Label::root());
        match random_trace(&start, 20, seed) {
            Ok(visited) => {
                states += visited.len();
                produced.states.extend(visited);
            }
            Err(e) => violations.push(format!("seed {seed}: {e}")),
        }
    }
    if violations.is_empty() {
        Ok(format!(
            "{PROCESSES} processes, {states} states, no violation"
        ))
    } else {
        Err(format!(
            "{} violations, first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

fn live_oracle_equivalence(produced: &Produced) -> Report {
    let mut mismatches = 0;
    let mut first = None;
    for s in &produced.states {
        let fired: BTreeSet<Label> = tau_steps(s).into_iter().flat_map(|t| t.fired).collect();
        let oracle = live_oracle(s);
        if fired != oracle {
            mismatches += 1;
            first.get_or_insert_with(|| {
                format!("{s}: rules give {oracle:?}, transitions give {fired:?}")
            });
        }
    }
    match first {
        None => Ok(format!("{} states agree", produced.states.len())),
        Some(f) => Err(format!("{mismatches} mismatches, first: {f}")),
    }
}

/// Whether the unlabeled term can output on `a` at top level.
fn offers_a(e: &LabeledTerm) -> bool {
    step(&unlabel(e)).iter().any(|(action, _)| {
        matches!(action, Action::FreeOutput { chan, .. } | Action::BoundOutput { chan, .. } if chan.as_str() == "a")
    })
}

fn fairness_classification(produced: &Produced) -> Report {
    let mut notes = Vec::new();
    // The observer's input is the prefix labeled <1,0>; starving it on the
    // weak-fairness gap experiment gives a weakly but not strongly fair lasso.
    let start = label_term(
        &Process::par(experiment_of("weakfair-gap"), observer()),
        &Label::root(),
    );
    let observer_label: Label = "1,0".parse().unwrap();
    let run = run_scheduler(
        &start,
        Policy::avoiding(BTreeSet::from([observer_label])),
        50,
    );
    let Some((cert, _)) = run.lasso() else {
        return Err("the observer-avoiding run found no lasso".into());
    };
    let weak = validate_certificate(cert, Mode::Weak);
    let strong = validate_certificate(cert, Mode::Strong);
    if weak.class != FairnessClass::WeakFairOnly || !weak.accepted || strong.accepted {
        return Err(format!("weak-fairness gap lasso classified {}", weak.class));
    }
    notes.push(format!("starving lasso is {}", weak.class));
    // Always continuing the loop instead of offering a.
    let start = label_term(
        &Process::par(experiment_of("strongfair-gap"), observer()),
        &Label::root(),
    );
    let selector = Box::new(
        |_: &LabeledTerm, steps: &[fairpi_core::labeling::LabeledTransition]| {
            steps.iter().position(|t| !offers_a(&t.target))
        },
    );
    let run = run_scheduler(&start, Policy::Custom(selector), 50);
    let Some((cert, _)) = run.lasso() else {
        return Err("the loop-continuing run found no lasso".into());
    };
    let v = validate_certificate(cert, Mode::Strong);
    if v.class != FairnessClass::StrongFair || !v.unsuccessful {
        return Err(format!("loop-continuing lasso classified {}", v.class));
    }
    notes.push(format!("loop-continuing lasso is {}", v.class));
    let caps = Caps::default();
    let mut witnesses = 0;
    for (name, verdict) in &produced.verdicts {
        if let Some(w) = verdict.witness() {
            witnesses += 1;
            revalidate(verdict.property, w, &caps)
                .map_err(|e| format!("{name} {} witness: {e}", verdict.property))?;
        }
    }
    notes.push(format!("{witnesses} violation witnesses revalidate"));
    Ok(notes.join("; "))
}

fn scheduler_guarantee() -> Report {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut exceptions = Vec::new();
    let mut tally = [0usize; 3];
    for entry in &corpus {
        let start = label_term(
            &Process::par(entry.process.clone(), entry.observer.clone()),
            &Label::root(),
        );
        let run = run_scheduler(&start, Policy::StrongFairQueue, 200);
        if run.reaches_success() {
            tally[1] += 1;
        } else if matches!(run.ending, Ending::Maximal) {
            tally[0] += 1;
        } else if let Some((cert, _)) = run.lasso() {
            let v = validate_certificate(cert, Mode::Strong);
            if v.class == FairnessClass::StrongFair {
                tally[2] += 1;
            } else {
                exceptions.push(format!("{}: lasso is {}", entry.name, v.class));
            }
        } else {
            exceptions.push(format!(
                "{}: neither ended, succeeded nor looped",
                entry.name
            ));
        }
    }
    if exceptions.is_empty() {
        Ok(format!(
            "{} corpus starts: {} terminated, {} reached success, {} strongly fair lassos",
            corpus.len(),
            tally[0],
            tally[1],
            tally[2]
        ))
    } else {
        Err(exceptions.join("; "))
    }
}

fn brute_force_agreement() -> Report {
    const WANTED: usize = 200;
    let caps = Caps::default();
    let mut compared = 0;
    let mut seed = 0u64;
    let mut disagreements = Vec::new();
    let mut holding = [0usize; 2];
    while compared < WANTED && seed < 100_000 {
        let mut g = TermGenerator::with_seed(seed);
        seed += 1;
        let (p, o) = (g.process(), g.observer());
        let Some(graph) = small_graph(&Process::par(p.clone(), o.clone()), 12) else {
            continue;
        };
        if graph.success[0] {
            // Successful from the start: nothing to compare.
            continue;
        }
        compared += 1;
        let expectations = [(Must, must_by_paths(&graph)), (Fair, fair_by_paths(&graph))];
        holding[0] += usize::from(expectations[0].1);
        holding[1] += usize::from(expectations[1].1);
        for (property, expected) in expectations {
            let got = check(property, &p, &o, &caps).kind();
            let want = if expected { H } else { V };
            if got != want {
                disagreements.push(format!("{p} vs {o}: {property} {got}, paths say {want}"));
            }
        }
    }
    if compared < WANTED {
        return Err(format!(
            "only {compared} experiments with at most 12 states"
        ));
    }
    if disagreements.is_empty() {
        Ok(format!(
            "{compared} experiments with at most 12 states agree (must holds for {}, fair for {})",
            holding[0], holding[1]
        ))
    } else {
        Err(format!(
            "{} disagreements, first: {}",
            disagreements.len(),
            disagreements[0]
        ))
    }
}

/// The ordering must ⇒ wfmust ⇒ sfmust ⇒ fair among decided verdicts.
fn chain_violation(kinds: &[(Property, VerdictKind)]) -> Option<String> {
    let order = [Must, Wf, Sf, Fair];
    let kind = |p| kinds.iter().find(|(q, _)| *q == p).map(|(_, k)| *k);
    for (i, &stronger) in order.iter().enumerate() {
        for &weaker in &order[i + 1..] {
            if kind(stronger) == Some(H) && kind(weaker) == Some(V) {
                return Some(format!("{stronger} holds but {weaker} is violated"));
            }
        }
    }
    None
}

fn implication_chain() -> Report {
    const WANTED: usize = 100;
    let caps = Caps::default();
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut violations = Vec::new();
    for r in run_corpus(&corpus, &caps) {
        let kinds: Vec<_> = r
            .verdicts
            .iter()
            .map(|(v, _)| (v.property, v.kind()))
            .collect();
        if let Some(v) = chain_violation(&kinds) {
            violations.push(format!("{}: {v}", r.name));
        }
    }
    let mut decided = 0;
    let mut seed = 1_000_000u64;
    while decided < WANTED && seed < 1_010_000 {
        let mut g = TermGenerator::with_seed(seed);
        seed += 1;
        let (p, o) = (g.process(), g.observer());
        let kinds: Vec<_> = Property::ALL
            .iter()
            .map(|&q| (q, check(q, &p, &o, &caps).kind()))
            .collect();
        if kinds.iter().any(|(_, k)| *k == VerdictKind::Unknown) {
            continue;
        }
        decided += 1;
        if let Some(v) = chain_violation(&kinds) {
            violations.push(format!("{p} vs {o}: {v}"));
        }
    }
    if decided < WANTED {
        return Err(format!("only {decided} random experiments fully decided"));
    }
    if violations.is_empty() {
        Ok(format!(
            "{} corpus entries and {decided} random decided experiments respect the chain",
            corpus.len()
        ))
    } else {
        Err(violations.join("; "))
    }
}

fn main() -> ExitCode {
    let mut produced = Produced::default();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("verdict table reproduction", Box::new(verdict_table)),
        ("labeling invariant suite", Box::new(labeling_suite)),
        (
            "live-label oracle equivalence",
            Box::new(|p: &mut Produced| live_oracle_equivalence(p)),
        ),
        (
            "fairness classification",
            Box::new(|p: &mut Produced| fairness_classification(p)),
        ),
        (
            "scheduler guarantee",
            Box::new(|_: &mut Produced| scheduler_guarantee()),
        ),
        (
            "brute-force oracle agreement",
            Box::new(|_: &mut Produced| brute_force_agreement()),
        ),
        (
            "implication chain",
            Box::new(|_: &mut Produced| implication_chain()),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = run(&mut produced);
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
