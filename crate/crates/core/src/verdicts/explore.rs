//! Exploration of the labeled state space of an experiment.
//!
//! Nodes are labeled states identified by their erasure; each node keeps
//! the first labeled representative reached. Because the τ-steps of a
//! labeled state are enumerated in the order of its erasure's steps, an
//! index sequence found on the graph can be replayed from the labeled start
//! and reaches states with the same erasures.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::fairness::labeled_state;
use crate::labeling::{erased_key, label_term, tau_steps, unlabel, Label, LabeledTerm};
use crate::lts::{success_enabled, Caps, LtsError};
use crate::syntax::Process;

/// A τ-edge: the index of the step in the source's enumeration and the
/// target node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub index: usize,
    pub target: usize,
}

/// The explored labeled state space of an experiment.
#[derive(Clone, Debug)]
pub struct Exploration {
    /// The labeled start state, printed; certificates start here.
    pub start_text: String,
    pub states: Vec<LabeledTerm>,
    pub keys: Vec<String>,
    pub edges: Vec<Vec<Edge>>,
    pub success: Vec<bool>,
    pub expanded: Vec<bool>,
    pub truncated: Option<LtsError>,
}

impl Exploration {
    /// Breadth-first exploration of `experiment`, labeled from `⟨ε,0⟩`.
    /// Success nodes are not expanded: every τ-successor of an ω-enabled
    /// state is ω-enabled, since τ-steps never consume a top-level ω.
    pub fn new(experiment: &Process, caps: &Caps) -> Self {
        let (start, _) = labeled_state(&label_term(experiment, &Label::root()));
        let key = erased_key(&start);
        let mut x = Exploration {
            start_text: start.to_string(),
            success: vec![success_enabled(&unlabel(&start))],
            states: vec![start],
            keys: vec![key.clone()],
            edges: vec![Vec::new()],
            expanded: vec![false],
            truncated: None,
        };
        let mut index = HashMap::from([(key, 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if x.success[i] {
                x.expanded[i] = true;
                continue;
            }
            let width = unlabel(&x.states[i]).threads();
            if width > caps.width {
                x.truncated.get_or_insert(LtsError::WidthExceeded {
                    width,
                    cap: caps.width,
                });
                continue;
            }
            let mut edges = Vec::new();
            let mut complete = true;
            for (k, t) in tau_steps(&x.states[i]).into_iter().enumerate() {
                let (next, _) = labeled_state(&t.target);
                let key = erased_key(&next);
                let j = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        if x.states.len() >= caps.nodes {
                            complete = false;
                            x.truncated
                                .get_or_insert(LtsError::CapExceeded { cap: caps.nodes });
                            continue;
                        }
                        let j = x.states.len();
                        x.success.push(success_enabled(&unlabel(&next)));
                        x.states.push(next);
                        x.keys.push(key.clone());
                        x.edges.push(Vec::new());
                        x.expanded.push(false);
                        index.insert(key, j);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push(Edge {
                    index: k,
                    target: j,
                });
            }
            x.edges[i] = edges;
            x.expanded[i] = complete;
        }
        x
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.truncated.is_none()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Distinct successor nodes of `i`.
    pub fn successors(&self, i: usize) -> BTreeSet<usize> {
        self.edges[i].iter().map(|e| e.target).collect()
    }

    /// Whether node `i` is a deadlock: expanded, without τ-steps.
    pub fn is_deadlock(&self, i: usize) -> bool {
        self.expanded[i] && !self.success[i] && self.edges[i].is_empty()
    }

    /// Shortest paths from the start through non-success nodes: for each
    /// reached node, its predecessor edge. The start maps to `None`.
    pub fn unsuccessful_tree(&self) -> HashMap<usize, Option<(usize, usize)>> {
        let mut parent = HashMap::new();
        if self.success[0] {
            return parent;
        }
        parent.insert(0, None);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for e in &self.edges[i] {
                if !self.success[e.target] && !parent.contains_key(&e.target) {
                    parent.insert(e.target, Some((i, e.index)));
                    queue.push_back(e.target);
                }
            }
        }
        parent
    }

    /// Step indices and nodes along the tree path from the start to `node`.
    pub fn path_to(
        &self,
        tree: &HashMap<usize, Option<(usize, usize)>>,
        node: usize,
    ) -> (Vec<usize>, Vec<usize>) {
        let mut indices = Vec::new();
        let mut nodes = vec![node];
        let mut cur = node;
        while let Some(Some((prev, index))) = tree.get(&cur) {
            indices.push(*index);
            nodes.push(*prev);
            cur = *prev;
        }
        indices.reverse();
        nodes.reverse();
        (indices, nodes)
    }

    /// Nodes from which an ω-enabled node is reachable.
    pub fn can_reach_success(&self) -> Vec<bool> {
        let mut preds = vec![Vec::new(); self.len()];
        for (i, es) in self.edges.iter().enumerate() {
            for e in es {
                preds[e.target].push(i);
            }
        }
        let mut good = self.success.clone();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| good[i]).collect();
        while let Some(i) = queue.pop_front() {
            for &p in &preds[i] {
                if !good[p] {
                    good[p] = true;
                    queue.push_back(p);
                }
            }
        }
        good
    }

    /// Whether every node reachable from `i` is expanded.
    pub fn closure_complete(&self, i: usize) -> bool {
        let mut seen = BTreeSet::from([i]);
        let mut stack = vec![i];
        while let Some(n) = stack.pop() {
            if !self.expanded[n] {
                return false;
            }
            for e in &self.edges[n] {
                if seen.insert(e.target) {
                    stack.push(e.target);
                }
            }
        }
        true
    }
}
