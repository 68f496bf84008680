//! A component-count abstraction of labeled experiments, used to prove
//! that every weak-fair or strong-fair computation succeeds.
//!
//! A node records how many top-level components of each *type* (canonical
//! erased component) a state has; inert components are dropped. Every
//! τ-step touches at most two components, so the steps of a node are
//! computed on a *representative*: a concrete labeled term with one copy
//! per counted component. In saturated mode counts above a threshold `K`
//! collapse to `Many`, represented by `K + 1` copies; the result is a finite
//! over-approximation of the reachable states.
//!
//! Labels are abstracted to *roles* `(type, signature)`, where the
//! signature is the syntactic position of the label inside its component
//! (identical siblings share a signature). An edge *keeps* a type when every
//! instance of it is untouched by the step. A type kept by every edge of a
//! strongly connected set of nodes, and counted exactly at all of them, holds
//! the same labels for as long as a computation stays inside the set; the
//! refinement uses such persistent roles to discard nodes no fair infinite
//! computation can visit infinitely often.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::fairness::Mode;
use crate::labeling::{
    components, label_term, live_labels, normalize, normalize_inert, tau_steps, unlabel, Label,
    LabeledTerm,
};
use crate::lts::{success_enabled, Caps, LtsError};
use crate::syntax::{canonicalize, Process};

/// How component counts are abstracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Abstraction {
    /// Counts are kept exactly; nodes are exactly the reachable states.
    Exact,
    /// Counts above `threshold` become `Many`.
    Saturated { threshold: usize },
}

/// An abstract component count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Count {
    Exact(usize),
    /// More than the saturation threshold.
    Many,
}

/// A role: a component type and a position inside it.
pub type Role = (usize, String);

/// A node of the quotient graph.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientNode {
    pub counts: BTreeMap<usize, Count>,
    /// Whether the node can perform ω.
    pub success: bool,
    /// Roles live at the node.
    pub live: BTreeSet<Role>,
    pub expanded: bool,
}

impl QuotientNode {
    fn tracked(&self, ty: usize) -> bool {
        matches!(self.counts.get(&ty), Some(Count::Exact(_)))
    }
}

/// A τ-edge between abstract nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct QuotientEdge {
    pub target: usize,
    /// Roles fired by the step.
    pub fired: BTreeSet<Role>,
    /// Exactly counted types none of whose instances take part in the step;
    /// their labels are carried to the target unchanged.
    pub kept: BTreeSet<usize>,
}

/// The abstract graph reachable from a start state.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientGraph {
    pub abstraction: Abstraction,
    /// Canonical text of each component type.
    pub types: Vec<String>,
    pub nodes: Vec<QuotientNode>,
    pub edges: Vec<Vec<QuotientEdge>>,
    pub start: usize,
    #[serde(skip)]
    pub truncated: Option<LtsError>,
}

/// Outcome of the fairness refinement.
#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    /// Every fair computation of the requested kind succeeds.
    pub holds: bool,
    /// Non-success nodes without τ-steps.
    pub deadlocks: Vec<usize>,
    /// Strongly connected sets of non-success nodes that survived refinement.
    pub remaining: Vec<Vec<usize>>,
    pub rounds: usize,
}

struct Builder {
    abstraction: Abstraction,
    caps: Caps,
    type_index: HashMap<String, usize>,
    type_terms: Vec<Arc<Process>>,
    types: Vec<String>,
}

/// The labeled instance of one component in a representative.
struct Instance {
    ty: usize,
    labels: BTreeSet<Label>,
}

struct Representative {
    term: LabeledTerm,
    instances: Vec<Instance>,
    roles: HashMap<Label, Role>,
}

impl Builder {
    fn intern(&mut self, component: &Process) -> usize {
        let form = canonicalize(component);
        if let Some(&i) = self.type_index.get(form.key()) {
            return i;
        }
        let i = self.types.len();
        self.type_index.insert(form.key().to_string(), i);
        self.types.push(form.key().to_string());
        self.type_terms.push(form.term().clone());
        i
    }

    fn abstract_count(&self, n: usize) -> Option<Count> {
        match (n, self.abstraction) {
            (0, _) => None,
            (n, Abstraction::Saturated { threshold }) if n > threshold => Some(Count::Many),
            (n, _) => Some(Count::Exact(n)),
        }
    }

    fn copies(&self, count: Count) -> usize {
        match (count, self.abstraction) {
            (Count::Exact(n), _) => n,
            (Count::Many, Abstraction::Saturated { threshold }) => threshold + 1,
            (Count::Many, Abstraction::Exact) => unreachable!("exact graphs have no Many counts"),
        }
    }

    /// Count the component types of a labeled state.
    fn type_counts(&mut self, state: &LabeledTerm) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for c in components(state) {
            *counts.entry(self.intern(&unlabel(&c))).or_insert(0) += 1;
        }
        counts
    }

    fn representative(&mut self, counts: &BTreeMap<usize, Count>) -> Representative {
        let parts: Vec<Process> = counts
            .iter()
            .flat_map(|(&ty, &c)| std::iter::repeat_n(ty, self.copies(c)))
            .map(|ty| (*self.type_terms[ty]).clone())
            .collect();
        let term = normalize(&label_term(&Process::par_all(parts), &Label::root()));
        let mut instances = Vec::new();
        let mut roles = HashMap::new();
        for c in components(&term) {
            let ty = self.intern(&unlabel(&c));
            let mut sigs = Vec::new();
            signatures(&c, String::new(), &mut sigs);
            let labels = sigs.iter().map(|(l, _)| l.clone()).collect();
            for (l, sig) in sigs {
                roles.insert(l, (ty, sig));
            }
            instances.push(Instance { ty, labels });
        }
        Representative {
            term,
            instances,
            roles,
        }
    }

    /// Abstract successors of a concrete step from a node with `counts`;
    /// `after` holds the type counts of the representative's target.
    fn targets(
        &self,
        counts: &BTreeMap<usize, Count>,
        after: &BTreeMap<usize, usize>,
    ) -> Vec<BTreeMap<usize, Count>> {
        let all: BTreeSet<usize> = counts.keys().chain(after.keys()).copied().collect();
        let mut options: Vec<BTreeMap<usize, Count>> = vec![BTreeMap::new()];
        for ty in all {
            let t = after.get(&ty).copied().unwrap_or(0);
            let choices: Vec<Option<Count>> = match (counts.get(&ty), self.abstraction) {
                (Some(Count::Many), Abstraction::Saturated { threshold }) => {
                    // The real count was some N > threshold and the step
                    // changed it by t - (threshold + 1), so the new count is
                    // at least t.
                    let least = t;
                    let mut v: Vec<Option<Count>> = (least..=threshold)
                        .map(|n| self.abstract_count(n))
                        .collect();
                    v.push(Some(Count::Many));
                    v
                }
                _ => vec![self.abstract_count(t)],
            };
            options = options
                .into_iter()
                .flat_map(|partial| {
                    choices.iter().map(move |choice| {
                        let mut next = partial.clone();
                        if let Some(c) = choice {
                            next.insert(ty, *c);
                        }
                        next
                    })
                })
                .collect();
        }
        options.sort();
        options.dedup();
        options
    }
}

/// Record the signature of every label in `e`: its path through the term,
/// where a parallel operand is identified by the first sibling with the
/// same erasure.
fn signatures(e: &LabeledTerm, path: String, out: &mut Vec<(Label, String)>) {
    match e {
        LabeledTerm::Nil | LabeledTerm::Success { .. } => {}
        LabeledTerm::Input { label, body, .. } | LabeledTerm::Output { label, body, .. } => {
            out.push((label.clone(), path.clone()));
            signatures(body, format!("{path}."), out);
        }
        LabeledTerm::Rep { label, .. } => out.push((label.clone(), path)),
        LabeledTerm::Res { body, .. } => signatures(body, format!("{path}ν"), out),
        LabeledTerm::Par(..) => {
            let items = components(e);
            let erased: Vec<Process> = items.iter().map(unlabel).collect();
            for (i, item) in items.iter().enumerate() {
                let first = erased.iter().position(|p| *p == erased[i]).unwrap_or(i);
                signatures(item, format!("{path}|{first}"), out);
            }
        }
    }
}

/// Explore the quotient graph of the labeled experiment `start`.
pub fn build_quotient_graph(
    start: &LabeledTerm,
    abstraction: Abstraction,
    caps: &Caps,
) -> QuotientGraph {
    let mut b = Builder {
        abstraction,
        caps: *caps,
        type_index: HashMap::new(),
        type_terms: Vec::new(),
        types: Vec::new(),
    };
    let (state, _) = normalize_inert(start);
    let concrete = b.type_counts(&state);
    let start_counts = b
        .targets(&BTreeMap::new(), &concrete)
        .into_iter()
        .next()
        .expect("one abstraction of a concrete state");
    let mut graph = QuotientGraph {
        abstraction,
        types: Vec::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        start: 0,
        truncated: None,
    };
    let mut index: HashMap<BTreeMap<usize, Count>, usize> = HashMap::new();
    let mut pending: Vec<Representative> = Vec::new();
    let add = |b: &mut Builder,
               graph: &mut QuotientGraph,
               pending: &mut Vec<Representative>,
               counts: BTreeMap<usize, Count>|
     -> usize {
        let rep = b.representative(&counts);
        let live = live_labels(&rep.term)
            .iter()
            .filter_map(|l| rep.roles.get(l).cloned())
            .collect();
        let success = success_enabled(&unlabel(&rep.term));
        graph.nodes.push(QuotientNode {
            counts,
            success,
            live,
            expanded: false,
        });
        graph.edges.push(Vec::new());
        pending.push(rep);
        graph.nodes.len() - 1
    };
    let first = add(&mut b, &mut graph, &mut pending, start_counts.clone());
    index.insert(start_counts, first);
    let mut queue = VecDeque::from([first]);
    let mut reps: HashMap<usize, Representative> = HashMap::new();
    reps.insert(first, pending.pop().expect("just added"));
    while let Some(i) = queue.pop_front() {
        let rep = reps.remove(&i).expect("queued nodes have representatives");
        if graph.nodes[i].success {
            continue;
        }
        let width = unlabel(&rep.term).threads();
        if width > b.caps.width {
            graph.truncated.get_or_insert(LtsError::WidthExceeded {
                width,
                cap: b.caps.width,
            });
            continue;
        }
        let counts = graph.nodes[i].counts.clone();
        let mut edges = BTreeSet::new();
        let mut complete = true;
        for step in tau_steps(&rep.term) {
            let (after, _) = normalize_inert(&step.target);
            let after_components = components(&after);
            let surviving: BTreeSet<BTreeSet<Label>> = after_components
                .iter()
                .map(crate::labeling::all_labels)
                .collect();
            let mut kept: BTreeSet<usize> = counts
                .iter()
                .filter(|(_, c)| matches!(c, Count::Exact(_)))
                .map(|(t, _)| *t)
                .collect();
            for inst in &rep.instances {
                if !surviving.contains(&inst.labels) {
                    kept.remove(&inst.ty);
                }
            }
            let fired: BTreeSet<Role> = step
                .fired
                .iter()
                .filter_map(|l| rep.roles.get(l).cloned())
                .collect();
            let concrete = b.type_counts(&after);
            for target_counts in b.targets(&counts, &concrete) {
                let j = match index.get(&target_counts) {
                    Some(&j) => j,
                    None => {
                        if graph.nodes.len() >= b.caps.nodes {
                            complete = false;
                            graph
                                .truncated
                                .get_or_insert(LtsError::CapExceeded { cap: b.caps.nodes });
                            continue;
                        }
                        let j = add(&mut b, &mut graph, &mut pending, target_counts.clone());
                        reps.insert(j, pending.pop().expect("just added"));
                        index.insert(target_counts, j);
                        queue.push_back(j);
                        j
                    }
                };
                let kept = kept
                    .iter()
                    .copied()
                    .filter(|t| graph.nodes[j].tracked(*t))
                    .collect();
                edges.insert(QuotientEdge {
                    target: j,
                    fired: fired.clone(),
                    kept,
                });
            }
        }
        graph.edges[i] = edges.into_iter().collect();
        graph.nodes[i].expanded = complete;
    }
    graph.types = b.types;
    graph
}

impl QuotientGraph {
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
        self.edges.iter().map(Vec::len).sum()
    }

    /// Non-success nodes reachable from the start through non-success nodes.
    pub fn unsuccessful_region(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        if !self.nodes[self.start].success {
            seen.insert(self.start);
            queue.push_back(self.start);
        }
        while let Some(i) = queue.pop_front() {
            for e in &self.edges[i] {
                if !self.nodes[e.target].success && seen.insert(e.target) {
                    queue.push_back(e.target);
                }
            }
        }
        seen
    }

    /// Strongly connected sets among `alive` that contain at least one edge.
    pub fn cyclic_components(&self, alive: &BTreeSet<usize>) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<usize, ()>::new();
        let ids: BTreeMap<usize, _> = alive.iter().map(|&n| (n, g.add_node(n))).collect();
        for &n in alive {
            for e in &self.edges[n] {
                if let Some(&t) = ids.get(&e.target) {
                    g.update_edge(ids[&n], t, ());
                }
            }
        }
        let mut out: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|scc| {
                let mut v: Vec<usize> = scc.into_iter().map(|ix| g[ix]).collect();
                v.sort_unstable();
                v
            })
            .filter(|scc| scc.len() > 1 || self.edges[scc[0]].iter().any(|e| e.target == scc[0]))
            .collect();
        out.sort();
        out
    }

    /// Types counted exactly at every node of `scc` and kept by every edge
    /// inside it.
    pub fn persistent_types(&self, scc: &[usize]) -> BTreeSet<usize> {
        let members: BTreeSet<usize> = scc.iter().copied().collect();
        let mut types: BTreeSet<usize> = self.nodes[scc[0]]
            .counts
            .keys()
            .copied()
            .filter(|t| scc.iter().all(|&n| self.nodes[n].tracked(*t)))
            .collect();
        for &n in scc {
            for e in self.edges[n].iter().filter(|e| members.contains(&e.target)) {
                types.retain(|t| e.kept.contains(t));
            }
        }
        types
    }

    /// Discard nodes that no fair infinite computation visits infinitely
    /// often, and report what remains.
    ///
    /// Strong mode removes a node where a persistent role is live: the same
    /// label would be live at every visit. Weak mode removes a whole
    /// strongly connected set when some persistent role is live at all of its
    /// nodes: that label would be live continuously.
    pub fn refine(&self, mode: Mode) -> Refinement {
        let region = self.unsuccessful_region();
        let deadlocks: Vec<usize> = region
            .iter()
            .copied()
            .filter(|&n| self.nodes[n].expanded && self.edges[n].is_empty())
            .collect();
        let mut alive = region;
        let mut rounds = 0;
        loop {
            rounds += 1;
            let mut removed = false;
            for scc in self.cyclic_components(&alive) {
                let persistent = self.persistent_types(&scc);
                if persistent.is_empty() {
                    continue;
                }
                match mode {
                    Mode::Strong => {
                        for &n in &scc {
                            if self.nodes[n]
                                .live
                                .iter()
                                .any(|(t, _)| persistent.contains(t))
                            {
                                alive.remove(&n);
                                removed = true;
                            }
                        }
                    }
                    Mode::Weak => {
                        let everywhere = self.nodes[scc[0]].live.iter().any(|role| {
                            persistent.contains(&role.0)
                                && scc.iter().all(|&n| self.nodes[n].live.contains(role))
                        });
                        if everywhere {
                            for n in &scc {
                                alive.remove(n);
                            }
                            removed = true;
                        }
                    }
                }
            }
            if !removed {
                break;
            }
        }
        let remaining = self.cyclic_components(&alive);
        let holds = self.is_complete() && deadlocks.is_empty() && remaining.is_empty();
        Refinement {
            holds,
            deadlocks,
            remaining,
            rounds,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("quotient graphs serialise");
        v["schema"] = serde_json::json!(1);
        v["complete"] = serde_json::json!(self.is_complete());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_observer;

    fn quotient(text: &str, abstraction: Abstraction) -> QuotientGraph {
        let e = label_term(&parse_observer(text).unwrap(), &Label::root());
        build_quotient_graph(&e, abstraction, &Caps::default())
    }

    const SATURATED: Abstraction = Abstraction::Saturated { threshold: 2 };

    #[test]
    fn tau_free_start_is_a_single_node() {
        let q = quotient("a<b> | c(x).w", Abstraction::Exact);
        assert_eq!(q.len(), 1);
        assert_eq!(q.edge_count(), 0);
    }

    #[test]
    fn busy_loop_with_ready_observer_is_discarded_in_both_modes() {
        let q = quotient(
            "(nu b)(b<u> | !b(x).b<u>) | a<u> | a(x).w",
            Abstraction::Exact,
        );
        let region = q.unsuccessful_region();
        let sccs = q.cyclic_components(&region);
        assert_eq!(sccs.len(), 1);
        let persistent = q.persistent_types(&sccs[0]);
        assert_eq!(persistent.len(), 2, "pending output and observer persist");
        assert!(q.refine(Mode::Weak).holds);
        assert!(q.refine(Mode::Strong).holds);
    }

    #[test]
    fn busy_loop_with_blocked_observer_survives() {
        let q = quotient("(nu b)(b<u> | !b(x).b<u>) | a(x).w", Abstraction::Exact);
        let r = q.refine(Mode::Strong);
        assert!(!r.holds);
        assert_eq!(r.remaining.len(), 1);
    }

    #[test]
    fn saturation_bounds_growing_outputs() {
        let q = quotient("(nu c)(c<u> | !c(x).(c<u> | a<u>))", SATURATED);
        assert!(q.is_complete());
        assert!(q.len() <= 4, "{} nodes", q.len());
        assert!(q
            .nodes
            .iter()
            .any(|n| n.counts.values().any(|c| *c == Count::Many)));
    }

    #[test]
    fn occasional_observer_readiness_separates_modes() {
        let q = quotient(
            "!a(x) | (nu b)(b<u> | !b(x).(a<u> | b<u>)) | a(x).w",
            SATURATED,
        );
        assert!(q.refine(Mode::Strong).holds);
        assert!(!q.refine(Mode::Weak).holds);
    }
}
