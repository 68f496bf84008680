//! Capped exploration of canonical τ-graphs.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{is_inert, success_enabled, tau_successors};
use crate::syntax::{canonicalize, CanonicalForm, Process};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtsError {
    #[error("exploration exceeded the cap of {cap} nodes")]
    CapExceeded { cap: usize },
    #[error("a reachable state has {width} parallel threads, above the cap of {cap}")]
    WidthExceeded { width: usize, cap: usize },
}

/// Resource bounds shared by every exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Maximum number of explored nodes.
    pub nodes: usize,
    /// States with more parallel threads than this are left unexpanded.
    pub width: usize,
    /// Maximum length of scheduler runs and certificate prefixes.
    pub steps: usize,
    /// Maximum number of simple cycles composed into one candidate loop.
    pub cycles: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            nodes: 50_000,
            width: 16,
            steps: 200,
            cycles: 3,
        }
    }
}

impl Caps {
    pub fn with_nodes(nodes: usize) -> Self {
        Caps {
            nodes,
            ..Caps::default()
        }
    }
}

/// The state identity used by graph exploration: the canonical form with
/// inert top-level components (those with no transitions at all) removed.
/// Inert components can never act or synchronise, so removing them
/// preserves the τ-behaviour and ω-enabledness of every state.
pub fn state_key(p: &Process) -> CanonicalForm {
    let form = canonicalize(p);
    let parts = form.components();
    if parts.iter().all(|c| !is_inert(c)) {
        return form;
    }
    let live: Vec<Process> = parts
        .into_iter()
        .filter(|c| !is_inert(c))
        .map(|c| (*c).clone())
        .collect();
    canonicalize(&Process::par_all(live))
}

/// A canonical τ-graph, possibly only partially explored.
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub nodes: Vec<CanonicalForm>,
    pub start: usize,
    /// Sorted, de-duplicated τ-successors of each node.
    pub tau_edges: Vec<Vec<usize>>,
    /// Whether the node can perform ω.
    pub success: Vec<bool>,
    /// Whether the successors of the node were computed.
    pub expanded: Vec<bool>,
    pub caps: Caps,
    /// Why exploration stopped early, if it did.
    pub truncated: Option<LtsError>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.truncated.is_none()
    }

    pub fn edge_count(&self) -> usize {
        self.tau_edges.iter().map(Vec::len).sum()
    }

    /// Graphviz rendering; success nodes are drawn double-circled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph states {\n  rankdir=LR;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let shape = if self.success[i] {
                "doublecircle"
            } else {
                "circle"
            };
            let style = if self.expanded[i] {
                ""
            } else {
                ", style=dashed"
            };
            let label = node.key().replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  n{i} [shape={shape}{style}, label=\"{label}\"];");
        }
        let _ = writeln!(out, "  start [shape=point];\n  start -> n{};", self.start);
        for (i, succ) in self.tau_edges.iter().enumerate() {
            for j in succ {
                let _ = writeln!(out, "  n{i} -> n{j};");
            }
        }
        out.push_str("}\n");
        out
    }

    /// JSON rendering of the graph.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "start": self.start,
            "complete": self.is_complete(),
            "nodes": self.nodes.iter().enumerate().map(|(i, n)| serde_json::json!({
                "id": i,
                "term": n.key(),
                "success": self.success[i],
                "expanded": self.expanded[i],
            })).collect::<Vec<_>>(),
            "edges": self.tau_edges.iter().enumerate()
                .flat_map(|(i, s)| s.iter().map(move |j| [i, *j]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Breadth-first exploration of the τ-graph of `experiment`, stopping at the
/// node cap and leaving over-wide states unexpanded.
pub fn explore_state_graph(experiment: &Process, caps: &Caps) -> StateGraph {
    let start = state_key(experiment);
    let mut graph = StateGraph {
        nodes: vec![start.clone()],
        start: 0,
        tau_edges: vec![Vec::new()],
        success: vec![success_enabled(start.term())],
        expanded: vec![false],
        caps: *caps,
        truncated: None,
    };
    let mut index: HashMap<CanonicalForm, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let term: Arc<Process> = graph.nodes[i].term().clone();
        let width = graph.nodes[i].term().threads();
        if width > caps.width {
            graph.truncated.get_or_insert(LtsError::WidthExceeded {
                width,
                cap: caps.width,
            });
            continue;
        }
        let mut succ = BTreeSet::new();
        let mut complete = true;
        for target in tau_successors(&term) {
            let key = state_key(&target);
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if graph.nodes.len() >= caps.nodes {
                        complete = false;
                        graph
                            .truncated
                            .get_or_insert(LtsError::CapExceeded { cap: caps.nodes });
                        continue;
                    }
                    let j = graph.nodes.len();
                    graph.success.push(success_enabled(key.term()));
                    graph.nodes.push(key.clone());
                    graph.tau_edges.push(Vec::new());
                    graph.expanded.push(false);
                    index.insert(key, j);
                    queue.push_back(j);
                    j
                }
            };
            succ.insert(j);
        }
        graph.tau_edges[i] = succ.into_iter().collect();
        graph.expanded[i] = complete;
    }
    graph
}

/// The complete canonical τ-graph of `experiment`, or an error when it does
/// not fit within `cap` nodes.
pub fn build_state_graph(experiment: &Process, cap: usize) -> Result<StateGraph, LtsError> {
    let graph = explore_state_graph(experiment, &Caps::with_nodes(cap));
    match &graph.truncated {
        None => Ok(graph),
        Some(e) => Err(e.clone()),
    }
}

/// All canonical forms reachable from `p` by zero or more τ-steps.
pub fn weak_reach(p: &Process, cap: usize) -> Result<BTreeSet<CanonicalForm>, LtsError> {
    let start = canonicalize(p);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for q in tau_successors(cur.term()) {
            let key = canonicalize(&q);
            if !seen.contains(&key) {
                if seen.len() >= cap {
                    return Err(LtsError::CapExceeded { cap });
                }
                seen.insert(key.clone());
                queue.push_back(key);
            }
        }
    }
    Ok(seen)
}

/// Whether `p` can weakly reach a state that performs ω.
pub fn can_report(p: &Process, cap: usize) -> Result<bool, LtsError> {
    Ok(weak_reach(p, cap)?
        .iter()
        .any(|q| success_enabled(q.term())))
}
