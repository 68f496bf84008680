//! Testing verdicts: must, fair, weak-fair must and strong-fair must.
//!
//! must and fair are decided on the explored τ-graph of the experiment.
//! The fair-must verdicts combine cheap implications (must implies both,
//! both imply fair), a validated search for fair unsuccessful computations,
//! and a proof of absence on the quotient graph; whatever none of these
//! settles is reported as unknown.

mod bisim;
mod explore;
mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::fairness::{
    advance, labeled_state, run_scheduler, validate_certificate, FairnessClass, LassoCertificate,
    Mode, Policy,
};
use crate::labeling::{erased_key, tau_steps, unlabel};
use crate::lts::{success_enabled, Caps};
use crate::quotient::{build_quotient_graph, Abstraction};
use crate::syntax::{parse_labeled, Process};

pub use bisim::{bisimulation, check_bisim_bounded, BisimResult};
pub use explore::{Edge, Exploration};

/// Version of the verdict JSON document.
pub const VERDICT_SCHEMA: u32 = 1;

/// Saturation threshold of the quotient used when exact exploration fails.
const SATURATION: usize = 2;

/// A testing property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Must,
    Fair,
    #[serde(rename = "wfmust")]
    WeakFairMust,
    #[serde(rename = "sfmust")]
    StrongFairMust,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Must,
        Property::Fair,
        Property::WeakFairMust,
        Property::StrongFairMust,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Property::Must => "must",
            Property::Fair => "fair",
            Property::WeakFairMust => "wfmust",
            Property::StrongFairMust => "sfmust",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                format!("unknown property '{s}' (expected must, fair, wfmust or sfmust)")
            })
    }
}

/// How an unlabeled witness path ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum PathEnd {
    /// The last state has no τ-step.
    Deadlock,
    /// The last state equals the state at position `from`.
    Cycle { from: usize },
    /// No ω-enabled state is reachable from the last state.
    Stuck,
}

/// A witness for a violated property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Witness {
    /// A path of τ-steps from the labeled start, with the erased states it
    /// visits.
    Path {
        start: String,
        steps: Vec<usize>,
        states: Vec<String>,
        end: PathEnd,
    },
    /// A fair unsuccessful computation.
    Certificate {
        certificate: LassoCertificate,
        class: FairnessClass,
    },
}

/// The three-valued result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated(Box<Witness>),
    Unknown(String),
}

impl Outcome {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Outcome::Holds => VerdictKind::Holds,
            Outcome::Violated(_) => VerdictKind::Violated,
            Outcome::Unknown(_) => VerdictKind::Unknown,
        }
    }
}

/// The verdict without its evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VerdictKind {
    Holds,
    Violated,
    Unknown,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Holds => "HOLDS",
            VerdictKind::Violated => "VIOLATED",
            VerdictKind::Unknown => "UNKNOWN",
        })
    }
}

/// Exploration statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: usize,
    pub edges: usize,
    pub cycles_examined: usize,
    pub wall_time_ms: u64,
}

/// A verdict with its evidence.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub property: Property,
    pub outcome: Outcome,
    /// How the verdict was reached.
    pub evidence: String,
    pub caps: Caps,
    pub stats: Stats,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        self.outcome.kind()
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Violated(w) => Some(w),
            _ => None,
        }
    }

    /// The verdict document; `timings` adds the wall time, which is the
    /// only nondeterministic field.
    pub fn to_json(&self, timings: bool) -> serde_json::Value {
        let mut stats = serde_json::json!({
            "nodes": self.stats.nodes,
            "edges": self.stats.edges,
            "cycles_examined": self.stats.cycles_examined,
        });
        if timings {
            stats["wall_time_ms"] = serde_json::json!(self.stats.wall_time_ms);
        }
        let mut doc = serde_json::json!({
            "schema": VERDICT_SCHEMA,
            "property": self.property,
            "verdict": self.kind(),
            "evidence": self.evidence,
            "caps": self.caps,
            "stats": stats,
        });
        match &self.outcome {
            Outcome::Violated(w) => doc["witness"] = serde_json::to_value(w).expect("witness"),
            Outcome::Unknown(reason) => doc["reason"] = serde_json::json!(reason),
            Outcome::Holds => {}
        }
        doc
    }
}

/// Check `property` of the experiment `process | observer`.
pub fn check(property: Property, process: &Process, observer: &Process, caps: &Caps) -> Verdict {
    let experiment = Process::par(process.clone(), observer.clone());
    let started = Instant::now();
    let x = Exploration::new(&experiment, caps);
    let mut verdict = match property {
        Property::Must => must(&x, caps),
        Property::Fair => fair(&x, &experiment, caps),
        Property::WeakFairMust => fair_must(&x, &experiment, Mode::Weak, caps),
        Property::StrongFairMust => fair_must(&x, &experiment, Mode::Strong, caps),
    };
    verdict.stats.nodes = verdict.stats.nodes.max(x.len());
    verdict.stats.edges = verdict.stats.edges.max(x.edge_count());
    verdict.stats.wall_time_ms = started.elapsed().as_millis() as u64;
    verdict
}

pub fn check_must(process: &Process, observer: &Process, caps: &Caps) -> Verdict {
    check(Property::Must, process, observer, caps)
}

pub fn check_fair(process: &Process, observer: &Process, caps: &Caps) -> Verdict {
    check(Property::Fair, process, observer, caps)
}

pub fn check_wfmust(process: &Process, observer: &Process, caps: &Caps) -> Verdict {
    check(Property::WeakFairMust, process, observer, caps)
}

pub fn check_sfmust(process: &Process, observer: &Process, caps: &Caps) -> Verdict {
    check(Property::StrongFairMust, process, observer, caps)
}

fn verdict(
    property: Property,
    outcome: Outcome,
    evidence: impl Into<String>,
    caps: &Caps,
) -> Verdict {
    Verdict {
        property,
        outcome,
        evidence: evidence.into(),
        caps: *caps,
        stats: Stats::default(),
    }
}

fn path_witness(x: &Exploration, steps: Vec<usize>, nodes: &[usize], end: PathEnd) -> Witness {
    Witness::Path {
        start: x.start_text.clone(),
        steps,
        states: nodes.iter().map(|&n| x.keys[n].clone()).collect(),
        end,
    }
}

/// A shortest unsuccessful maximal computation: a path to a deadlock or a
/// path into a cycle of the unsuccessful region.
fn unsuccessful_maximal(x: &Exploration) -> Option<Witness> {
    let tree = x.unsuccessful_tree();
    let mut best: Option<(usize, Witness)> = None;
    let mut consider = |len: usize, w: Witness| {
        if best.as_ref().is_none_or(|(l, _)| len < *l) {
            best = Some((len, w));
        }
    };
    let mut region: Vec<usize> = tree.keys().copied().collect();
    region.sort_unstable();
    for &n in &region {
        if x.is_deadlock(n) {
            let (steps, nodes) = x.path_to(&tree, n);
            consider(
                steps.len(),
                path_witness(x, steps, &nodes, PathEnd::Deadlock),
            );
        }
        // Shortest way back to n inside the region closes a cycle.
        if let Some((back, back_nodes)) = shortest_return(x, n, &tree) {
            let (mut steps, mut nodes) = x.path_to(&tree, n);
            let from = nodes.len() - 1;
            let len = steps.len() + back.len();
            steps.extend(back);
            nodes.extend(back_nodes);
            consider(len, path_witness(x, steps, &nodes, PathEnd::Cycle { from }));
        }
    }
    best.map(|(_, w)| w)
}

/// Shortest non-empty path from `n` back to `n` through region nodes.
fn shortest_return(
    x: &Exploration,
    n: usize,
    region: &std::collections::HashMap<usize, Option<(usize, usize)>>,
) -> Option<(Vec<usize>, Vec<usize>)> {
    use std::collections::{HashMap, VecDeque};
    let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut queue = VecDeque::new();
    for e in &x.edges[n] {
        if e.target == n {
            return Some((vec![e.index], vec![n]));
        }
        if region.contains_key(&e.target) && !parent.contains_key(&e.target) {
            parent.insert(e.target, (n, e.index));
            queue.push_back(e.target);
        }
    }
    while let Some(u) = queue.pop_front() {
        for e in &x.edges[u] {
            if e.target == n {
                let mut steps = vec![e.index];
                let mut nodes = vec![n];
                let mut cur = u;
                while cur != n {
                    let (prev, index) = parent[&cur];
                    steps.push(index);
                    nodes.push(cur);
                    cur = prev;
                }
                steps.reverse();
                nodes.reverse();
                return Some((steps, nodes));
            }
            if region.contains_key(&e.target) && e.target != n && !parent.contains_key(&e.target) {
                parent.insert(e.target, (u, e.index));
                queue.push_back(e.target);
            }
        }
    }
    None
}

fn must(x: &Exploration, caps: &Caps) -> Verdict {
    if let Some(w) = unsuccessful_maximal(x) {
        let what = match &w {
            Witness::Path {
                end: PathEnd::Deadlock,
                ..
            } => "an unsuccessful deadlock is reachable",
            _ => "an unsuccessful cycle is reachable",
        };
        return verdict(Property::Must, Outcome::Violated(Box::new(w)), what, caps);
    }
    match &x.truncated {
        None => verdict(
            Property::Must,
            Outcome::Holds,
            "the explored graph has no unsuccessful cycle or deadlock",
            caps,
        ),
        Some(e) => verdict(
            Property::Must,
            Outcome::Unknown(e.to_string()),
            "exploration incomplete",
            caps,
        ),
    }
}

/// A reachable state from which success is unreachable, with its whole
/// forward closure explored.
fn stuck_state(x: &Exploration) -> Option<Witness> {
    let good = x.can_reach_success();
    let tree = x.unsuccessful_tree();
    let mut region: Vec<usize> = tree.keys().copied().collect();
    region.sort_unstable();
    region
        .into_iter()
        .find(|&n| !good[n] && x.closure_complete(n))
        .map(|n| {
            let (steps, nodes) = x.path_to(&tree, n);
            path_witness(x, steps, &nodes, PathEnd::Stuck)
        })
}

fn fair(x: &Exploration, experiment: &Process, caps: &Caps) -> Verdict {
    if let Some(w) = stuck_state(x) {
        return verdict(
            Property::Fair,
            Outcome::Violated(Box::new(w)),
            "a reachable state cannot reach success",
            caps,
        );
    }
    if x.is_complete() {
        return verdict(
            Property::Fair,
            Outcome::Holds,
            "every reachable state can reach success",
            caps,
        );
    }
    // Strong-fair must implies fair.
    let start = labeled_start(experiment);
    let abstraction = Abstraction::Saturated {
        threshold: SATURATION,
    };
    let q = build_quotient_graph(&start, abstraction, caps);
    if q.refine(Mode::Strong).holds {
        let mut v = verdict(
            Property::Fair,
            Outcome::Holds,
            "strong-fair must holds on the saturated quotient, which implies fair",
            caps,
        );
        v.stats.nodes = q.len();
        v.stats.edges = q.edge_count();
        return v;
    }
    let reason = x
        .truncated
        .as_ref()
        .map_or_else(String::new, |e| e.to_string());
    verdict(
        Property::Fair,
        Outcome::Unknown(reason),
        "exploration incomplete",
        caps,
    )
}

fn labeled_start(experiment: &Process) -> crate::labeling::LabeledTerm {
    crate::labeling::label_term(experiment, &crate::labeling::Label::root())
}

fn fair_must(x: &Exploration, experiment: &Process, mode: Mode, caps: &Caps) -> Verdict {
    let property = match mode {
        Mode::Strong => Property::StrongFairMust,
        Mode::Weak => Property::WeakFairMust,
    };
    let must = must(x, caps);
    if must.kind() == VerdictKind::Holds {
        return verdict(
            property,
            Outcome::Holds,
            "must holds, which implies it",
            caps,
        );
    }
    if let Some(Witness::Path { steps, .. }) = stuck_state(x) {
        // Fair fails; every fair continuation of the stuck state is unsuccessful.
        let witness = extend_to_certificate(x, &steps, mode, caps)
            .unwrap_or_else(|| stuck_state(x).expect("found above"));
        return verdict(
            property,
            Outcome::Violated(Box::new(witness)),
            "fair fails, which implies it fails",
            caps,
        );
    }
    let start = labeled_start(experiment);
    let mut abstractions = Vec::new();
    if x.is_complete() {
        abstractions.push(Abstraction::Exact);
    }
    abstractions.push(Abstraction::Saturated {
        threshold: SATURATION,
    });
    for abstraction in abstractions {
        let q = build_quotient_graph(&start, abstraction, caps);
        if q.refine(mode).holds {
            let what = match abstraction {
                Abstraction::Exact => "no fair unsuccessful computation survives refinement",
                Abstraction::Saturated { .. } => {
                    "no fair unsuccessful computation survives refinement of the saturated quotient"
                }
            };
            let mut v = verdict(property, Outcome::Holds, what, caps);
            v.stats.nodes = q.len();
            v.stats.edges = q.edge_count();
            return v;
        }
    }
    let found = search::search_fair_violation(x, mode, caps);
    let cycles = found.cycles_examined;
    if let Some((certificate, validation)) = found.found {
        let mut v = verdict(
            property,
            Outcome::Violated(Box::new(Witness::Certificate {
                certificate,
                class: validation.class,
            })),
            "validated fair unsuccessful computation",
            caps,
        );
        v.stats.cycles_examined = cycles;
        return v;
    }
    let mut v = verdict(
        property,
        Outcome::Unknown("no validated witness and no proof of absence within caps".into()),
        "search exhausted",
        caps,
    );
    v.stats.cycles_examined = cycles;
    v
}

/// Extend a path to a stuck state by a run of the fair queue into a
/// validated certificate.
fn extend_to_certificate(
    x: &Exploration,
    steps: &[usize],
    mode: Mode,
    caps: &Caps,
) -> Option<Witness> {
    let mut state = x.states[0].clone();
    for &i in steps {
        state = advance(&state, i)?.1;
    }
    let run = run_scheduler(&state, Policy::StrongFairQueue, caps.steps);
    let cycle = match run.lasso() {
        Some((cert, _)) => {
            let mut prefix = steps.to_vec();
            prefix.extend(&cert.prefix);
            (prefix, cert.cycle.clone())
        }
        None if run.is_maximal() => {
            let mut prefix = steps.to_vec();
            prefix.extend(run.indices());
            (prefix, Vec::new())
        }
        None => return None,
    };
    let cert = LassoCertificate::new(&x.start_text, &cycle.0, &cycle.1);
    let v = validate_certificate(&cert, mode);
    v.is_violation_witness().then(|| Witness::Certificate {
        certificate: v.completed(cert),
        class: v.class,
    })
}

/// Independently re-check a witness against `property`.
pub fn revalidate(property: Property, witness: &Witness, caps: &Caps) -> Result<(), String> {
    match witness {
        Witness::Certificate { certificate, class } => {
            let mode = match property {
                Property::WeakFairMust => Mode::Weak,
                _ => Mode::Strong,
            };
            let v = validate_certificate(certificate, mode);
            if &v.class != class {
                return Err(format!(
                    "class {} differs from the claimed {class}",
                    v.class
                ));
            }
            let acceptable = match property {
                Property::Must => !matches!(v.class, FairnessClass::Rejected(_)),
                _ => v.accepted,
            };
            if !acceptable {
                return Err(format!("certificate is {} for {property}", v.class));
            }
            if !v.unsuccessful {
                return Err("certificate visits an ω-enabled state".into());
            }
            Ok(())
        }
        Witness::Path {
            start,
            steps,
            states,
            end,
        } => {
            let start = parse_labeled(start).map_err(|e| e.to_string())?;
            let (mut state, _) = labeled_state(&start);
            let mut keys = vec![erased_key(&state)];
            let mut visited = vec![state.clone()];
            for &i in steps {
                state = advance(&state, i).ok_or("step index out of range")?.1;
                keys.push(erased_key(&state));
                visited.push(state.clone());
            }
            if &keys != states {
                return Err("replayed states differ from the listed ones".into());
            }
            if visited.iter().any(|s| success_enabled(&unlabel(s))) {
                return Err("path visits an ω-enabled state".into());
            }
            match end {
                PathEnd::Deadlock if tau_steps(&state).is_empty() => Ok(()),
                PathEnd::Deadlock => Err("last state is not a deadlock".into()),
                PathEnd::Cycle { from }
                    if keys.get(*from) == keys.last() && *from < steps.len() =>
                {
                    Ok(())
                }
                PathEnd::Cycle { .. } => Err("path does not close a cycle".into()),
                PathEnd::Stuck => {
                    let closure = crate::lts::weak_reach(&unlabel(&state), caps.nodes)
                        .map_err(|e| format!("cannot re-explore the last state: {e}"))?;
                    if closure.iter().any(|q| success_enabled(q.term())) {
                        Err("success is reachable from the last state".into())
                    } else {
                        Ok(())
                    }
                }
            }
        }
    }
}
