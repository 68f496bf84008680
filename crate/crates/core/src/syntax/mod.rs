//! Abstract syntax of choiceless π-calculus processes and observers.
//!
//! Terms are immutable and share subterms through [`Arc`], so cloning a
//! process is cheap and values can be handed to concurrent analyses.

mod canonical;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub(crate) use canonical::{assemble, binder_base, cont_text, lookup, norm, unary_text};
pub use canonical::{canonicalize, CanonicalForm};
pub use parse::{parse_labeled, parse_observer, parse_process, ParseError};

/// A channel name.
///
/// User names match `[A-Za-z_][A-Za-z0-9_']*`. Fresh names are derived by
/// appending primes (`z`, `z'`, `z''`, …) until no collision remains, and
/// canonical binders are written `_0`, `_1`, ….
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The canonical binder name at index `k`.
    pub fn canonical(k: usize) -> Self {
        Name::new(&format!("_{k}"))
    }

    /// If this is a canonical binder name `_k`, return `k`.
    pub fn canonical_index(&self) -> Option<usize> {
        let digits = self.0.strip_prefix('_')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }

    /// First of `self`, `self'`, `self''`, … that is not in `avoid`.
    pub fn fresh(&self, avoid: &BTreeSet<Name>) -> Name {
        let mut candidate = self.clone();
        while avoid.contains(&candidate) {
            candidate = Name::new(&format!("{}'", candidate.0));
        }
        candidate
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

/// An unlabeled process or observer.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub enum Process {
    #[default]
    Nil,
    /// `chan(binder).body`
    Input {
        chan: Name,
        binder: Name,
        body: Arc<Process>,
    },
    /// `chan<object>.body`
    Output {
        chan: Name,
        object: Name,
        body: Arc<Process>,
    },
    Par(Arc<Process>, Arc<Process>),
    /// `(nu binder)(body)`
    Res {
        binder: Name,
        body: Arc<Process>,
    },
    /// `!body`
    Rep(Arc<Process>),
    /// `w.body`: reports success; only legal in observers.
    Success(Arc<Process>),
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Process {
    pub fn input(chan: impl Into<Name>, binder: impl Into<Name>, body: Process) -> Process {
        Process::Input {
            chan: chan.into(),
            binder: binder.into(),
            body: Arc::new(body),
        }
    }

    pub fn output(chan: impl Into<Name>, object: impl Into<Name>, body: Process) -> Process {
        Process::Output {
            chan: chan.into(),
            object: object.into(),
            body: Arc::new(body),
        }
    }

    pub fn par(left: Process, right: Process) -> Process {
        Process::Par(Arc::new(left), Arc::new(right))
    }

    /// Left-nested parallel composition of `parts`; `0` when empty.
    pub fn par_all<I: IntoIterator<Item = Process>>(parts: I) -> Process {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Process::Nil,
            Some(first) => iter.fold(first, Process::par),
        }
    }

    pub fn res(binder: impl Into<Name>, body: Process) -> Process {
        Process::Res {
            binder: binder.into(),
            body: Arc::new(body),
        }
    }

    pub fn rep(body: Process) -> Process {
        Process::Rep(Arc::new(body))
    }

    pub fn success(body: Process) -> Process {
        Process::Success(Arc::new(body))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Process::Nil)
    }

    /// Whether a success prefix occurs anywhere in the term.
    pub fn mentions_success(&self) -> bool {
        match self {
            Process::Nil => false,
            Process::Input { body, .. } | Process::Output { body, .. } => body.mentions_success(),
            Process::Par(l, r) => l.mentions_success() || r.mentions_success(),
            Process::Res { body, .. } | Process::Rep(body) => body.mentions_success(),
            Process::Success(_) => true,
        }
    }

    /// Free names, `fn(P)`.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let mut note = |n: &Name, bound: &Vec<Name>| {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        };
        match self {
            Process::Nil => {}
            Process::Input { chan, binder, body } => {
                note(chan, bound);
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Process::Output { chan, object, body } => {
                note(chan, bound);
                note(object, bound);
                body.collect_free(bound, out);
            }
            Process::Par(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Process::Res { binder, body } => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Process::Rep(body) | Process::Success(body) => body.collect_free(bound, out),
        }
    }

    /// Whether `name` occurs free; cheaper than building the whole set.
    pub fn has_free(&self, name: &Name) -> bool {
        match self {
            Process::Nil => false,
            Process::Input { chan, binder, body } => {
                chan == name || (binder != name && body.has_free(name))
            }
            Process::Output { chan, object, body } => {
                chan == name || object == name || body.has_free(name)
            }
            Process::Par(l, r) => l.has_free(name) || r.has_free(name),
            Process::Res { binder, body } => binder != name && body.has_free(name),
            Process::Rep(body) | Process::Success(body) => body.has_free(name),
        }
    }

    /// Bound names, `bn(P)`: every name occurring as an input or restriction binder.
    pub fn bound_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut BTreeSet<Name>) {
        match self {
            Process::Nil => {}
            Process::Input { binder, body, .. } | Process::Res { binder, body } => {
                out.insert(binder.clone());
                body.collect_bound(out);
            }
            Process::Output { body, .. } | Process::Rep(body) | Process::Success(body) => {
                body.collect_bound(out)
            }
            Process::Par(l, r) => {
                l.collect_bound(out);
                r.collect_bound(out);
            }
        }
    }

    /// Every name occurring in the term, free or bound.
    pub fn names(&self) -> BTreeSet<Name> {
        let mut out = self.free_names();
        out.extend(self.bound_names());
        out
    }

    /// Number of parallel threads: prefixes, replications and successes not
    /// under a prefix, counted through restrictions. Explorers compare it
    /// with the width cap.
    pub fn threads(&self) -> usize {
        match self {
            Process::Nil => 0,
            Process::Par(l, r) => l.threads() + r.threads(),
            Process::Res { body, .. } => body.threads(),
            _ => 1,
        }
    }

    /// Number of constructors, used to bound random generation and reports.
    pub fn size(&self) -> usize {
        match self {
            Process::Nil => 1,
            Process::Input { body, .. }
            | Process::Output { body, .. }
            | Process::Res { body, .. }
            | Process::Rep(body)
            | Process::Success(body) => 1 + body.size(),
            Process::Par(l, r) => 1 + l.size() + r.size(),
        }
    }
}

/// Capture-avoiding substitution `p{replacement/target}`.
///
/// Binders that would capture `replacement` are renamed to a fresh name
/// (`z` becomes `z'`, …) only when the substitution actually reaches
/// beneath them.
pub fn substitute(p: &Process, target: &Name, replacement: &Name) -> Process {
    if target == replacement || !p.has_free(target) {
        return p.clone();
    }
    subst(p, target, replacement)
}

fn subst(p: &Process, target: &Name, replacement: &Name) -> Process {
    let swap = |n: &Name| {
        if n == target {
            replacement.clone()
        } else {
            n.clone()
        }
    };
    match p {
        Process::Nil => Process::Nil,
        Process::Input { chan, binder, body } => {
            let (binder, body) = subst_under(binder, body, target, replacement);
            Process::Input {
                chan: swap(chan),
                binder,
                body,
            }
        }
        Process::Output { chan, object, body } => Process::Output {
            chan: swap(chan),
            object: swap(object),
            body: subst_arc(body, target, replacement),
        },
        Process::Par(l, r) => Process::Par(
            subst_arc(l, target, replacement),
            subst_arc(r, target, replacement),
        ),
        Process::Res { binder, body } => {
            let (binder, body) = subst_under(binder, body, target, replacement);
            Process::Res { binder, body }
        }
        Process::Rep(body) => Process::Rep(subst_arc(body, target, replacement)),
        Process::Success(body) => Process::Success(subst_arc(body, target, replacement)),
    }
}

fn subst_arc(p: &Arc<Process>, target: &Name, replacement: &Name) -> Arc<Process> {
    if p.has_free(target) {
        Arc::new(subst(p, target, replacement))
    } else {
        p.clone()
    }
}

fn subst_under(
    binder: &Name,
    body: &Arc<Process>,
    target: &Name,
    replacement: &Name,
) -> (Name, Arc<Process>) {
    if binder == target || !body.has_free(target) {
        return (binder.clone(), body.clone());
    }
    if binder == replacement {
        let mut avoid = body.free_names();
        avoid.insert(replacement.clone());
        avoid.insert(target.clone());
        let fresh = binder.fresh(&avoid);
        let renamed = subst(body, binder, &fresh);
        return (fresh, Arc::new(subst(&renamed, target, replacement)));
    }
    (binder.clone(), subst_arc(body, target, replacement))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Process {
        parse_observer(text).unwrap()
    }

    fn names(list: &[&str]) -> BTreeSet<Name> {
        list.iter().map(|s| Name::new(s)).collect()
    }

    #[test]
    fn free_names_follow_binding_structure() {
        assert_eq!(p("a(x).x<b>.0").free_names(), names(&["a", "b"]));
        assert_eq!(p("(nu a)(a<b>)").free_names(), names(&["b"]));
        assert!(Process::Nil.bound_names().is_empty());
        assert_eq!(p("a(x).(nu y)(x<y>)").bound_names(), names(&["x", "y"]));
    }

    #[test]
    fn substitution_replaces_every_free_occurrence() {
        let out = substitute(&p("y<y>"), &"y".into(), &"z".into());
        assert_eq!(out, p("z<z>"));
    }

    #[test]
    fn substitution_renames_capturing_binder() {
        let out = substitute(&p("(nu z)(y<z>)"), &"y".into(), &"z".into());
        assert_eq!(
            out,
            Process::res("z'", Process::output("z", "z'", Process::Nil))
        );
    }

    #[test]
    fn substitution_stops_at_shadowing_binder() {
        let src = p("a(y).y<y>");
        assert_eq!(substitute(&src, &"y".into(), &"z".into()), src);
    }

    #[test]
    fn fresh_names_append_primes() {
        let avoid = names(&["z", "z'"]);
        assert_eq!(Name::new("z").fresh(&avoid), Name::new("z''"));
        assert_eq!(Name::new("q").fresh(&avoid), Name::new("q"));
    }

    #[test]
    fn canonical_index_parses_only_canonical_names() {
        assert_eq!(Name::canonical(7).canonical_index(), Some(7));
        assert_eq!(Name::new("_x").canonical_index(), None);
        assert_eq!(Name::new("a1").canonical_index(), None);
    }
}
