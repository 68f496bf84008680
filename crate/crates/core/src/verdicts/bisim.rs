//! Strong early bisimilarity: bounded to `k` steps, or exact when both
//! transition systems are finite.
//!
//! Inputs are instantiated with the free names of both sides plus one
//! fresh name; bound outputs of the two sides are matched after renaming
//! their objects to a common name fresh for both.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::lts::{step_with, Action};
use crate::syntax::{canonicalize, substitute, Name, Process};

/// Outcome of a bisimilarity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BisimResult {
    pub bisimilar: bool,
    /// Whether the answer is for full bisimilarity (both systems finite)
    /// rather than `depth`-step bisimilarity.
    pub exact: bool,
    pub depth: usize,
    pub pairs_examined: usize,
}

/// Whether `p` and `q` are `k`-step bisimilar, or fully bisimilar when
/// both have at most `cap` reachable states.
pub fn check_bisim_bounded(p: &Process, q: &Process, k: usize, cap: usize) -> bool {
    bisimulation(p, q, k, cap).bisimilar
}

/// As [`check_bisim_bounded`], with details.
pub fn bisimulation(p: &Process, q: &Process, k: usize, cap: usize) -> BisimResult {
    let bound = match (reachable_states(p, cap), reachable_states(q, cap)) {
        // On finite systems, (n+m)-step bisimilarity is full bisimilarity.
        (Some(n), Some(m)) => Some(n + m),
        _ => None,
    };
    let depth = bound.unwrap_or(k);
    let mut checker = Checker {
        memo: HashMap::new(),
    };
    let bisimilar = checker.bisim(p, q, depth);
    BisimResult {
        bisimilar,
        exact: bound.is_some(),
        depth,
        pairs_examined: checker.memo.len(),
    }
}

fn candidates(p: &Process, q: &Process) -> BTreeSet<Name> {
    let mut names = p.free_names();
    names.extend(q.free_names());
    names.insert(Name::new("z").fresh(&names));
    names
}

/// Number of states reachable from `p` by any actions, if at most `cap`.
fn reachable_states(p: &Process, cap: usize) -> Option<usize> {
    let start = canonicalize(p);
    let mut seen = BTreeSet::from([start.key().to_string()]);
    let mut queue = VecDeque::from([start.term().clone()]);
    while let Some(cur) = queue.pop_front() {
        for (action, target) in step_with(&cur, &candidates(&cur, &cur)) {
            let target = normalise_extrusion(&action, target, &cur.free_names());
            let form = canonicalize(&target);
            if seen.insert(form.key().to_string()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(form.term().clone());
            }
        }
    }
    Some(seen.len())
}

/// Rename the object of a bound output to the first name fresh for `avoid`.
fn normalise_extrusion(action: &Action, target: Process, avoid: &BTreeSet<Name>) -> Process {
    match action {
        Action::BoundOutput { object, .. } => {
            let fresh = Name::new("e").fresh(avoid);
            substitute(&target, object, &fresh)
        }
        _ => target,
    }
}

/// The action with a bound-output object replaced by `fresh`.
fn with_fresh(action: &Action, fresh: &Name) -> Action {
    match action {
        Action::BoundOutput { chan, .. } => Action::BoundOutput {
            chan: chan.clone(),
            object: fresh.clone(),
        },
        a => a.clone(),
    }
}

struct Checker {
    memo: HashMap<(String, String, usize), bool>,
}

impl Checker {
    fn bisim(&mut self, p: &Process, q: &Process, k: usize) -> bool {
        if k == 0 {
            return true;
        }
        let (cp, cq) = (canonicalize(p), canonicalize(q));
        let key = (cp.key().to_string(), cq.key().to_string(), k);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let names = candidates(cp.term(), cq.term());
        let mut avoid = names.clone();
        avoid.extend(cp.term().names());
        avoid.extend(cq.term().names());
        let fresh = Name::new("e").fresh(&avoid);
        let moves = |r: &Process| -> Vec<(Action, Process)> {
            step_with(r, &names)
                .into_iter()
                .map(|(a, t)| {
                    let t = match &a {
                        Action::BoundOutput { object, .. } => substitute(&t, object, &fresh),
                        _ => t,
                    };
                    (with_fresh(&a, &fresh), t)
                })
                .collect()
        };
        let left = moves(cp.term());
        let right = moves(cq.term());
        let result = left.iter().all(|(a, p1)| {
            right
                .iter()
                .any(|(b, q1)| a == b && self.bisim(p1, q1, k - 1))
        }) && right.iter().all(|(b, q1)| {
            left.iter()
                .any(|(a, p1)| a == b && self.bisim(p1, q1, k - 1))
        });
        self.memo.insert(key, result);
        result
    }
}
