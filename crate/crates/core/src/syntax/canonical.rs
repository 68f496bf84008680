//! Structural canonical forms used as state identities.
//!
//! Normalisation flattens parallel composition into a sorted multiset,
//! erases `0` components, drops restrictions whose binder is unused, pushes
//! restrictions inward past parallel components that do not mention the
//! binder, and renames every binder to `_k` where `k` is its nesting depth
//! (offset past any `_j` that already occurs free). Sibling scopes never
//! nest, so depth-indexed names are unambiguous.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{Name, Process};

/// A normalised process together with its printed key and a stable hash.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    term: Arc<Process>,
    key: Arc<str>,
    hash: u64,
}

impl CanonicalForm {
    pub fn term(&self) -> &Arc<Process> {
        &self.term
    }

    /// Printed form of the canonical term; equal keys mean equal forms.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn hash_value(&self) -> u64 {
        self.hash
    }

    /// The top-level parallel components, each neither `0` nor a parallel.
    pub fn components(&self) -> Vec<Arc<Process>> {
        let mut out = Vec::new();
        flatten(&self.term, &mut out);
        out
    }
}

fn flatten(p: &Arc<Process>, out: &mut Vec<Arc<Process>>) {
    match &**p {
        Process::Nil => {}
        Process::Par(l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        _ => out.push(p.clone()),
    }
}

impl PartialEq for CanonicalForm {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for CanonicalForm {}

impl Hash for CanonicalForm {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl PartialOrd for CanonicalForm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonicalForm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

/// Compute the canonical form of `p`.
pub fn canonicalize(p: &Process) -> CanonicalForm {
    let parts = canonical_parts(p);
    let (key, term) = assemble(parts);
    let mut hasher = DefaultHasher::new();
    key.hash(&mut hasher);
    CanonicalForm {
        term,
        key: Arc::from(key),
        hash: hasher.finish(),
    }
}

/// Canonical top-level components with their printed forms, sorted.
pub(crate) fn canonical_parts(p: &Process) -> Vec<(String, Arc<Process>)> {
    let base = binder_base(p);
    let mut parts = norm(p, &mut Vec::new(), base);
    parts.sort_by(|a, b| a.0.cmp(&b.0));
    parts
}

/// Smallest index such that no free name `_j` has `j >= base`.
pub(crate) fn binder_base(p: &Process) -> usize {
    p.free_names()
        .iter()
        .filter_map(Name::canonical_index)
        .map(|k| k + 1)
        .max()
        .unwrap_or(0)
}

pub(crate) fn lookup(env: &[(Name, Name)], n: &Name) -> Name {
    env.iter()
        .rev()
        .find(|(from, _)| from == n)
        .map_or_else(|| n.clone(), |(_, to)| to.clone())
}

/// Normalise `p` under the renaming `env`, naming new binders from `depth`.
pub(crate) fn norm(
    p: &Process,
    env: &mut Vec<(Name, Name)>,
    depth: usize,
) -> Vec<(String, Arc<Process>)> {
    match p {
        Process::Nil => Vec::new(),
        Process::Par(l, r) => {
            let mut parts = norm(l, env, depth);
            parts.extend(norm(r, env, depth));
            parts
        }
        Process::Input { chan, binder, body } => {
            let chan = lookup(env, chan);
            let fresh = Name::canonical(depth);
            env.push((binder.clone(), fresh.clone()));
            let (text, body) = assemble(norm(body, env, depth + 1));
            env.pop();
            let key = format!("{chan}({fresh}){}", cont_text(&text, &body));
            vec![(
                key,
                Arc::new(Process::Input {
                    chan,
                    binder: fresh,
                    body,
                }),
            )]
        }
        Process::Output { chan, object, body } => {
            let chan = lookup(env, chan);
            let object = lookup(env, object);
            let (text, body) = assemble(norm(body, env, depth));
            let key = format!("{chan}<{object}>{}", cont_text(&text, &body));
            vec![(key, Arc::new(Process::Output { chan, object, body }))]
        }
        Process::Rep(body) => {
            let (text, body) = assemble(norm(body, env, depth));
            vec![(
                format!("!{}", unary_text(&text, &body)),
                Arc::new(Process::Rep(body)),
            )]
        }
        Process::Success(body) => {
            let (text, body) = assemble(norm(body, env, depth));
            vec![(
                format!("w{}", cont_text(&text, &body)),
                Arc::new(Process::Success(body)),
            )]
        }
        Process::Res { binder, body } => {
            let fresh = Name::canonical(depth);
            env.push((binder.clone(), fresh.clone()));
            let parts = norm(body, env, depth + 1);
            env.pop();
            let (inside, outside): (Vec<_>, Vec<_>) =
                parts.into_iter().partition(|(_, q)| q.has_free(&fresh));
            // Components floated out of the scope were named one level too
            // deep; renormalise them at the current depth.
            let mut out: Vec<(String, Arc<Process>)> = outside
                .iter()
                .flat_map(|(_, q)| norm(q, &mut Vec::new(), depth))
                .collect();
            if !inside.is_empty() {
                let (text, body) = assemble(inside);
                out.push((
                    format!("(nu {fresh})({text})"),
                    Arc::new(Process::Res {
                        binder: fresh,
                        body,
                    }),
                ));
            }
            out
        }
    }
}

pub(crate) fn cont_text(text: &str, body: &Process) -> String {
    match body {
        Process::Nil => String::new(),
        _ => format!(".{}", unary_text(text, body)),
    }
}

pub(crate) fn unary_text(text: &str, body: &Process) -> String {
    match body {
        Process::Par(..) => format!("({text})"),
        _ => text.to_string(),
    }
}

/// Sort components and rebuild a left-nested parallel composition.
pub(crate) fn assemble(mut parts: Vec<(String, Arc<Process>)>) -> (String, Arc<Process>) {
    parts.sort_by(|a, b| a.0.cmp(&b.0));
    let mut iter = parts.into_iter();
    let Some((mut text, mut term)) = iter.next() else {
        return ("0".to_string(), Arc::new(Process::Nil));
    };
    for (t, q) in iter {
        text.push_str(" | ");
        text.push_str(&t);
        term = Arc::new(Process::Par(term, q));
    }
    (text, term)
}

#[cfg(test)]
mod tests {
    use super::super::parse_observer;
    use super::*;

    fn canon(text: &str) -> CanonicalForm {
        canonicalize(&parse_observer(text).unwrap())
    }

    #[test]
    fn erases_nil_components() {
        assert_eq!(canon("0 | a<b>"), canon("a<b>"));
        assert_eq!(canon("0 | 0").key(), "0");
    }

    #[test]
    fn drops_unused_restriction() {
        assert_eq!(canon("(nu x)(a<b>)"), canon("a<b>"));
    }

    #[test]
    fn parallel_is_commutative_and_associative() {
        assert_eq!(canon("a<b> | c(x)"), canon("c(x) | a<b>"));
        assert_eq!(canon("(p<q> | a<b>) | c(x)"), canon("c(x) | (a<b> | p<q>)"));
    }

    #[test]
    fn alpha_equivalent_terms_coincide() {
        assert_eq!(canon("a(x).x<x>"), canon("a(y).y<y>"));
        assert_eq!(
            canon("(nu b)(b<y> | !b(x).b<x>)"),
            canon("(nu c)(!c(z).c<z> | c<y>)")
        );
        assert_eq!(canon("a(x).x<x>").key(), "a(_0)._0<_0>");
    }

    #[test]
    fn shrinks_scope_past_unrelated_components() {
        assert_eq!(canon("(nu x)(x<a> | b<c>)"), canon("b<c> | (nu x)(x<a>)"));
        assert_eq!(
            canon("(nu x)(x<a> | (nu y)(y<b>))"),
            canon("(nu y)(y<b>) | (nu x)(x<a>)")
        );
    }

    #[test]
    fn keeps_free_canonical_names_distinct_from_binders() {
        let c = canon("(nu x)(x<_0> | x(y))");
        assert_eq!(c.key(), "(nu _1)(_1(_2) | _1<_0>)");
    }

    #[test]
    fn is_idempotent_on_examples() {
        for text in [
            "(nu b)(b<y> | !b(x).b<x>) | a<c> | a(x).w",
            "a(x).(nu y)(x<y> | (nu z)(z<z> | y<a>))",
            "!(nu a)(a<u> | a(x).b<u> | a(x).c<u>)",
        ] {
            let once = canon(text);
            assert_eq!(canonicalize(once.term()), once, "{text}");
        }
    }

    #[test]
    fn components_are_flattened() {
        let c = canon("a<b> | (c<d> | 0) | e(x)");
        assert_eq!(c.components().len(), 3);
    }
}
