//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's own live-label computation, state
//! exploration or verdict code: the live predicate is computed rule by rule
//! from the shape of a labeled term, and the must/fair oracles enumerate
//! paths of the unlabeled τ-graph directly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use fairpi_core::labeling::{label_term, Label, LabeledTerm};
use fairpi_core::lts::{success_enabled, tau_successors};
use fairpi_core::syntax::{canonicalize, Name, Process};

/// What a labeled term can do at top level, by the rules for live labels.
#[derive(Default)]
struct Capabilities {
    /// Inputs: channel and label.
    inputs: Vec<(Name, Label)>,
    /// Free or bound outputs: channel and label.
    outputs: Vec<(Name, Label, Name)>,
    /// Label sets of τ-moves.
    taus: Vec<BTreeSet<Label>>,
}

fn capabilities(e: &LabeledTerm) -> Capabilities {
    match e {
        LabeledTerm::Nil | LabeledTerm::Success { .. } => Capabilities::default(),
        LabeledTerm::Input { chan, label, .. } => Capabilities {
            inputs: vec![(chan.clone(), label.clone())],
            ..Default::default()
        },
        LabeledTerm::Output {
            chan,
            object,
            label,
            ..
        } => Capabilities {
            outputs: vec![(chan.clone(), label.clone(), object.clone())],
            ..Default::default()
        },
        LabeledTerm::Par(l, r) => {
            let (l, r) = (capabilities(l), capabilities(r));
            let mut taus: Vec<BTreeSet<Label>> = l.taus.iter().chain(&r.taus).cloned().collect();
            // Communication and close: an input meets an output on the same
            // channel across the parallel operator.
            for (a, b) in [(&l, &r), (&r, &l)] {
                for (x, li) in &a.inputs {
                    for (y, lo, _) in &b.outputs {
                        if x == y {
                            taus.push(BTreeSet::from([li.clone(), lo.clone()]));
                        }
                    }
                }
            }
            Capabilities {
                inputs: l.inputs.into_iter().chain(r.inputs).collect(),
                outputs: l.outputs.into_iter().chain(r.outputs).collect(),
                taus,
            }
        }
        LabeledTerm::Res { binder, body } => {
            // Restriction blocks actions on the bound channel; an output of
            // the bound name on another channel is opened, which keeps it.
            let c = capabilities(body);
            Capabilities {
                inputs: c.inputs.into_iter().filter(|(x, _)| x != binder).collect(),
                outputs: c
                    .outputs
                    .into_iter()
                    .filter(|(x, _, _)| x != binder)
                    .collect(),
                taus: c.taus,
            }
        }
        LabeledTerm::Rep { label, body } => {
            // One copy of the body acts on behalf of the replication label.
            let c = capabilities(&label_term(body, &label.deeper()));
            Capabilities {
                inputs: c
                    .inputs
                    .into_iter()
                    .map(|(x, _)| (x, label.clone()))
                    .collect(),
                outputs: c
                    .outputs
                    .into_iter()
                    .map(|(x, _, o)| (x, label.clone(), o))
                    .collect(),
                taus: c
                    .taus
                    .into_iter()
                    .map(|_| BTreeSet::from([label.clone()]))
                    .collect(),
            }
        }
    }
}

/// Labels live with a τ-move, by the rules for live labels.
pub fn live_oracle(e: &LabeledTerm) -> BTreeSet<Label> {
    capabilities(e).taus.into_iter().flatten().collect()
}

/// The unlabeled τ-graph of an experiment, if it has at most `limit`
/// states (identified by canonical form).
pub struct SmallGraph {
    pub success: Vec<bool>,
    pub succ: Vec<Vec<usize>>,
}

pub fn small_graph(experiment: &Process, limit: usize) -> Option<SmallGraph> {
    let start = canonicalize(experiment);
    let mut index = HashMap::from([(start.key().to_string(), 0usize)]);
    let mut terms = vec![start.term().as_ref().clone()];
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut out = BTreeSet::new();
        if !success_enabled(&terms[i]) {
            for t in tau_successors(&terms[i]) {
                let key = canonicalize(&t).key().to_string();
                let j = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        if terms.len() >= limit {
                            return None;
                        }
                        index.insert(key, terms.len());
                        terms.push(t);
                        queue.push_back(terms.len() - 1);
                        terms.len() - 1
                    }
                };
                out.insert(j);
            }
        }
        if succ.len() <= i {
            succ.resize(i + 1, Vec::new());
        }
        succ[i] = out.into_iter().collect();
    }
    succ.resize(terms.len(), Vec::new());
    Some(SmallGraph {
        success: terms.iter().map(success_enabled).collect(),
        succ,
    })
}

/// Must by enumeration of maximal paths: every path ends in, or passes
/// through, a success state.
pub fn must_by_paths(g: &SmallGraph) -> bool {
    fn all_paths_succeed(g: &SmallGraph, node: usize, path: &mut Vec<usize>) -> bool {
        if g.success[node] {
            return true;
        }
        if g.succ[node].is_empty() || path.contains(&node) {
            // A deadlock, or a cycle that can be repeated forever.
            return false;
        }
        path.push(node);
        let ok = g.succ[node].iter().all(|&n| all_paths_succeed(g, n, path));
        path.pop();
        ok
    }
    all_paths_succeed(g, 0, &mut Vec::new())
}

/// Fair by enumeration: from every state reached by a path of unsuccessful
/// states, some path leads to success.
pub fn fair_by_paths(g: &SmallGraph) -> bool {
    let reaches = |from: usize| {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if g.success[n] {
                return true;
            }
            for &m in &g.succ[n] {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        false
    };
    let mut seen = BTreeSet::from([0]);
    let mut stack = vec![0];
    while let Some(n) = stack.pop() {
        if !reaches(n) {
            return false;
        }
        if g.success[n] {
            continue;
        }
        for &m in &g.succ[n] {
            if seen.insert(m) {
                stack.push(m);
            }
        }
    }
    true
}

/// Experiments from the worked examples, with the observer `a(x).w`.
pub fn named_experiments() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("fair-not-must", "(nu b)(b<u> | !b(x).b<u>) | a<u>"),
        ("weakfair-gap", "!a(x) | (nu b)(b<u> | !b(x).(a<u> | b<u>))"),
        (
            "strongfair-gap",
            "c<u> | !c(x).(nu b)(b<u> | b(y).c<u> | b(y).a<u>)",
        ),
        (
            "impossibility-E",
            "(nu c)(c<u> | !c(x).(c<u> | a<u>)) | (nu c)(c<u> | !c(x).c<u>)",
        ),
        (
            "impossibility-F",
            "!(nu b)(b<u> | b(x) | b(x).a<u>) | (nu c)(c<u> | !c(x).c<u>)",
        ),
    ])
}

/// Check the labeling invariants on every transition of `e`, returning the
/// transitions for further use.
///
/// * unicity: no label occurs twice in a target;
/// * disappearance: fired labels are absent from the target;
/// * persistence: labels of `e` that did not fire remain in the target
///   (ω-steps carry no fired labels and only signal success, so they are
///   exempt);
/// * conservativity: erasing labels maps the labeled transitions exactly
///   onto the unlabeled ones (same actions, same targets up to canonical
///   form), in both directions.
pub fn check_labeling_step(
    e: &LabeledTerm,
) -> Result<Vec<fairpi_core::labeling::LabeledTransition>, String> {
    use fairpi_core::labeling::{all_labels, label_occurrences, labeled_step_with, unlabel};
    use fairpi_core::lts::{input_candidates, step_with};
    let p = unlabel(e);
    let names = input_candidates(&p);
    let steps = labeled_step_with(e, &names);
    let before = all_labels(e);
    for t in &steps {
        let occ = label_occurrences(&t.target);
        let distinct: BTreeSet<&Label> = occ.iter().collect();
        if distinct.len() != occ.len() {
            return Err(format!("unicity: a label repeats in {}", t.target));
        }
        let after = all_labels(&t.target);
        if let Some(v) = t.fired.iter().find(|v| after.contains(*v)) {
            return Err(format!(
                "disappearance: fired <{v}> survives in {}",
                t.target
            ));
        }
        if t.action == fairpi_core::lts::Action::Omega {
            continue;
        }
        if let Some(v) = before
            .iter()
            .find(|v| !t.fired.contains(*v) && !after.contains(*v))
        {
            return Err(format!(
                "persistence: <{v}> vanished from {} to {}",
                e, t.target
            ));
        }
    }
    let erased: BTreeSet<(String, String)> = steps
        .iter()
        .map(|t| {
            (
                format!("{:?}", t.action),
                canonicalize(&unlabel(&t.target)).key().to_string(),
            )
        })
        .collect();
    let plain: BTreeSet<(String, String)> = step_with(&p, &names)
        .into_iter()
        .map(|(a, t)| (format!("{a:?}"), canonicalize(&t).key().to_string()))
        .collect();
    if erased != plain {
        let extra: Vec<_> = erased.difference(&plain).collect();
        let missing: Vec<_> = plain.difference(&erased).collect();
        return Err(format!(
            "conservativity at {e}: labeled-only {extra:?}, unlabeled-only {missing:?}"
        ));
    }
    Ok(steps)
}

/// Follow a random trace of at most `len` transitions from `start`,
/// checking every visited state; returns the visited states.
pub fn random_trace(
    start: &LabeledTerm,
    len: usize,
    seed: u64,
) -> Result<Vec<LabeledTerm>, String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut state = start.clone();
    let mut visited = vec![state.clone()];
    for _ in 0..len {
        let steps = check_labeling_step(&state)?;
        if steps.is_empty() {
            break;
        }
        state = steps[rng.gen_range(0..steps.len())].target.clone();
        visited.push(state.clone());
    }
    check_labeling_step(&state)?;
    Ok(visited)
}
