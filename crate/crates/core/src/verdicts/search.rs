//! Search for fair unsuccessful computations on an explored state space.
//!
//! Candidates are deadlocks and loops of the unsuccessful region: simple
//! cycles, then compositions of up to `caps.cycles` simple cycles through a
//! common node. The search is untrusted; every candidate is packaged as a
//! certificate and only reported when the validator accepts it.

use std::collections::{BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::explore::Exploration;
use crate::fairness::{validate_certificate, LassoCertificate, Mode, Validation};
use crate::lts::Caps;

/// Longest simple cycle enumerated.
const MAX_CYCLE_LEN: usize = 12;
/// Maximum number of simple cycles enumerated.
const CYCLE_BUDGET: usize = 2_000;
/// Maximum number of candidate loops validated.
const CANDIDATE_BUDGET: usize = 4_000;
/// Maximum number of search-tree edges followed while enumerating cycles.
const DFS_BUDGET: usize = 200_000;

/// A simple cycle as `(node, step index)` pairs; the step leaves the node.
type Cycle = Vec<(usize, usize)>;

pub(crate) struct SearchOutcome {
    pub found: Option<(LassoCertificate, Validation)>,
    pub cycles_examined: usize,
}

pub(crate) fn search_fair_violation(x: &Exploration, mode: Mode, caps: &Caps) -> SearchOutcome {
    let tree = x.unsuccessful_tree();
    let mut region: Vec<usize> = tree.keys().copied().collect();
    region.sort_unstable();
    let mut examined = 0;
    let check = |prefix: Vec<usize>, cycle: Vec<usize>| {
        let cert = LassoCertificate::new(&x.start_text, &prefix, &cycle);
        let v = validate_certificate(&cert, mode);
        v.is_violation_witness().then(|| (v.completed(cert), v))
    };
    for &n in &region {
        if x.is_deadlock(n) {
            examined += 1;
            if let Some(found) = check(x.path_to(&tree, n).0, Vec::new()) {
                return SearchOutcome {
                    found: Some(found),
                    cycles_examined: examined,
                };
            }
        }
    }
    let members: BTreeSet<usize> = region.iter().copied().collect();
    let cycles = simple_cycles(x, &region, &members);
    let mut candidates = 0;
    for size in 1..=caps.cycles.max(1) {
        let mut found = None;
        for_each_combination(&cycles, size, &mut |parts, at| {
            if candidates >= CANDIDATE_BUDGET {
                return true;
            }
            candidates += 1;
            examined += 1;
            let cycle: Vec<usize> = parts.iter().flat_map(|c| rotate(c, at)).collect();
            let prefix = x.path_to(&tree, at).0;
            if prefix.len() + cycle.len() > caps.steps {
                return false;
            }
            found = check(prefix, cycle);
            found.is_some()
        });
        if found.is_some() {
            return SearchOutcome {
                found,
                cycles_examined: examined,
            };
        }
    }
    SearchOutcome {
        found: None,
        cycles_examined: examined,
    }
}

/// Step indices of `cycle` starting from `node`, which it must contain.
fn rotate(cycle: &Cycle, node: usize) -> Vec<usize> {
    let k = cycle
        .iter()
        .position(|(n, _)| *n == node)
        .expect("cycle passes through node");
    cycle[k..]
        .iter()
        .chain(&cycle[..k])
        .map(|(_, i)| *i)
        .collect()
}

/// Call `f` on every `size`-subset of `cycles` (in index order) sharing a
/// node, passing the smallest shared node; stop when `f` returns true.
fn for_each_combination(
    cycles: &[Cycle],
    size: usize,
    f: &mut dyn FnMut(&[&Cycle], usize) -> bool,
) {
    let nodes: Vec<BTreeSet<usize>> = cycles
        .iter()
        .map(|c| c.iter().map(|(n, _)| *n).collect())
        .collect();
    fn go(
        cycles: &[Cycle],
        nodes: &[BTreeSet<usize>],
        size: usize,
        from: usize,
        chosen: &mut Vec<usize>,
        shared: BTreeSet<usize>,
        f: &mut dyn FnMut(&[&Cycle], usize) -> bool,
    ) -> bool {
        if chosen.len() == size {
            let Some(&at) = shared.iter().next() else {
                return false;
            };
            let parts: Vec<&Cycle> = chosen.iter().map(|&i| &cycles[i]).collect();
            return f(&parts, at);
        }
        for i in from..cycles.len() {
            let next: BTreeSet<usize> = if chosen.is_empty() {
                nodes[i].clone()
            } else {
                shared.intersection(&nodes[i]).copied().collect()
            };
            if next.is_empty() {
                continue;
            }
            chosen.push(i);
            let stop = go(cycles, nodes, size, i + 1, chosen, next, f);
            chosen.pop();
            if stop {
                return true;
            }
        }
        false
    }
    go(cycles, &nodes, size, 0, &mut Vec::new(), BTreeSet::new(), f);
}

/// Simple cycles of the unsuccessful region, each reported once from its
/// smallest node, shortest first.
fn simple_cycles(x: &Exploration, region: &[usize], members: &BTreeSet<usize>) -> Vec<Cycle> {
    let component = components(x, region, members);
    let mut out = Vec::new();
    let mut budget = DFS_BUDGET;
    for &s in region {
        let mut search = Dfs {
            x,
            root: s,
            component: &component,
            budget: &mut budget,
            out: &mut out,
        };
        let mut on_path = BTreeSet::from([s]);
        search.visit(s, &mut Vec::new(), &mut on_path);
        if out.len() >= CYCLE_BUDGET || budget == 0 {
            break;
        }
    }
    out.truncate(CYCLE_BUDGET);
    out.sort_by_key(Vec::len);
    out
}

/// Strongly connected component of every region node; cycles never leave
/// the component of their nodes.
fn components(
    x: &Exploration,
    region: &[usize],
    members: &BTreeSet<usize>,
) -> HashMap<usize, usize> {
    let mut g = DiGraph::<usize, ()>::new();
    let ids: HashMap<usize, NodeIndex> = region.iter().map(|&n| (n, g.add_node(n))).collect();
    for &n in region {
        for e in &x.edges[n] {
            if members.contains(&e.target) {
                g.add_edge(ids[&n], ids[&e.target], ());
            }
        }
    }
    let mut out = HashMap::new();
    for (k, scc) in tarjan_scc(&g).into_iter().enumerate() {
        for i in scc {
            out.insert(g[i], k);
        }
    }
    out
}

struct Dfs<'a> {
    x: &'a Exploration,
    root: usize,
    component: &'a HashMap<usize, usize>,
    budget: &'a mut usize,
    out: &'a mut Vec<Cycle>,
}

impl Dfs<'_> {
    fn visit(&mut self, node: usize, path: &mut Cycle, on_path: &mut BTreeSet<usize>) {
        if self.out.len() >= CYCLE_BUDGET || path.len() >= MAX_CYCLE_LEN {
            return;
        }
        let home = self.component[&self.root];
        for e in &self.x.edges[node] {
            if *self.budget == 0 {
                return;
            }
            *self.budget -= 1;
            if e.target == self.root {
                let mut cycle = path.clone();
                cycle.push((node, e.index));
                self.out.push(cycle);
            } else if e.target > self.root
                && self.component.get(&e.target) == Some(&home)
                && !on_path.contains(&e.target)
            {
                path.push((node, e.index));
                on_path.insert(e.target);
                self.visit(e.target, path, on_path);
                on_path.remove(&e.target);
                path.pop();
            }
        }
    }
}
