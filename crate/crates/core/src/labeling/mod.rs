//! Labeled terms: every prefix and replication carries a label `⟨s,n⟩`,
//! where `s` is the static position (one bit per parallel split) and `n`
//! the number of prefixes consumed on the way there.
//!
//! A success prefix carries no label. It keeps a hidden *seed*, the label
//! its position would have, which is used to label its continuation when ω
//! fires; seeds are not part of `top` or `lab`.

mod normal;
mod step;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::syntax::{substitute, Name, Process};

pub use normal::{
    components, erased_key, match_up_to_relabeling, normalize, normalize_inert, relabel,
    relabel_matches, LabelMap,
};
pub(crate) use step::labeled_moves;
pub use step::{labeled_step, labeled_step_with, live_labels, tau_steps, LabeledTransition};

/// A label `⟨s,n⟩`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label {
    path: Vec<bool>,
    depth: u32,
}

impl Label {
    pub fn new(path: Vec<bool>, depth: u32) -> Self {
        Label { path, depth }
    }

    /// `⟨ε,0⟩`.
    pub fn root() -> Self {
        Label {
            path: Vec::new(),
            depth: 0,
        }
    }

    /// The static position `s`.
    pub fn path(&self) -> &[bool] {
        &self.path
    }

    /// The dynamic depth `n`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `⟨s·bit, n⟩`.
    pub fn child(&self, bit: bool) -> Self {
        let mut path = self.path.clone();
        path.push(bit);
        Label {
            path,
            depth: self.depth,
        }
    }

    /// `⟨s, n+1⟩`.
    pub fn deeper(&self) -> Self {
        Label {
            path: self.path.clone(),
            depth: self.depth + 1,
        }
    }

    fn path_text(&self) -> String {
        self.path
            .iter()
            .map(|b| if *b { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.path_text(), self.depth)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, depth) = s
            .split_once(',')
            .ok_or_else(|| format!("label '{s}' lacks ','"))?;
        let path = path
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("label '{s}' has a non-binary position")),
            })
            .collect::<Result<_, _>>()?;
        let depth = depth
            .parse()
            .map_err(|_| format!("label '{s}' has a bad depth"))?;
        Ok(Label { path, depth })
    }
}

impl TryFrom<String> for Label {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.to_string()
    }
}

/// `s0 ⊑ s1`: `s0` is a prefix of `s1`.
pub fn prefix_leq(s0: &[bool], s1: &[bool]) -> bool {
    s1.starts_with(s0)
}

/// The conflict-freedom relation: no label of `l0` has a position that is
/// a prefix of, or extends, the position of a label of `l1`.
pub fn conflict_free(l0: &BTreeSet<Label>, l1: &BTreeSet<Label>) -> bool {
    l0.iter().all(|a| {
        l1.iter()
            .all(|b| !prefix_leq(a.path(), b.path()) && !prefix_leq(b.path(), a.path()))
    })
}

/// A labeled process or observer.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum LabeledTerm {
    Nil,
    Input {
        chan: Name,
        binder: Name,
        label: Label,
        body: Arc<LabeledTerm>,
    },
    Output {
        chan: Name,
        object: Name,
        label: Label,
        body: Arc<LabeledTerm>,
    },
    Par(Arc<LabeledTerm>, Arc<LabeledTerm>),
    Res {
        binder: Name,
        body: Arc<LabeledTerm>,
    },
    /// A labeled replication; its body stays unlabeled.
    Rep {
        label: Label,
        body: Arc<Process>,
    },
    /// An unlabeled success prefix with the seed used to label `body` once ω fires.
    Success {
        seed: Label,
        body: Arc<Process>,
    },
}

impl fmt::Debug for LabeledTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The labeling function `L⟨s,n⟩(p)`.
pub fn label_term(p: &Process, seed: &Label) -> LabeledTerm {
    match p {
        Process::Nil => LabeledTerm::Nil,
        Process::Input { chan, binder, body } => LabeledTerm::Input {
            chan: chan.clone(),
            binder: binder.clone(),
            label: seed.clone(),
            body: Arc::new(label_term(body, &seed.deeper())),
        },
        Process::Output { chan, object, body } => LabeledTerm::Output {
            chan: chan.clone(),
            object: object.clone(),
            label: seed.clone(),
            body: Arc::new(label_term(body, &seed.deeper())),
        },
        Process::Par(l, r) => LabeledTerm::Par(
            Arc::new(label_term(l, &seed.child(false))),
            Arc::new(label_term(r, &seed.child(true))),
        ),
        Process::Res { binder, body } => LabeledTerm::Res {
            binder: binder.clone(),
            body: Arc::new(label_term(body, seed)),
        },
        Process::Rep(body) => LabeledTerm::Rep {
            label: seed.clone(),
            body: body.clone(),
        },
        Process::Success(body) => LabeledTerm::Success {
            seed: seed.clone(),
            body: body.clone(),
        },
    }
}

/// Label erasure, `Unl(e)`.
pub fn unlabel(e: &LabeledTerm) -> Process {
    match e {
        LabeledTerm::Nil => Process::Nil,
        LabeledTerm::Input {
            chan, binder, body, ..
        } => Process::Input {
            chan: chan.clone(),
            binder: binder.clone(),
            body: Arc::new(unlabel(body)),
        },
        LabeledTerm::Output {
            chan, object, body, ..
        } => Process::Output {
            chan: chan.clone(),
            object: object.clone(),
            body: Arc::new(unlabel(body)),
        },
        LabeledTerm::Par(l, r) => Process::Par(Arc::new(unlabel(l)), Arc::new(unlabel(r))),
        LabeledTerm::Res { binder, body } => Process::Res {
            binder: binder.clone(),
            body: Arc::new(unlabel(body)),
        },
        LabeledTerm::Rep { body, .. } => Process::Rep(body.clone()),
        LabeledTerm::Success { body, .. } => Process::Success(body.clone()),
    }
}

/// Labels of the top-level prefixes and replications, `top(e)`.
pub fn top_labels(e: &LabeledTerm) -> BTreeSet<Label> {
    let mut out = BTreeSet::new();
    collect_top(e, &mut out);
    out
}

fn collect_top(e: &LabeledTerm, out: &mut BTreeSet<Label>) {
    match e {
        LabeledTerm::Nil | LabeledTerm::Success { .. } => {}
        LabeledTerm::Input { label, .. }
        | LabeledTerm::Output { label, .. }
        | LabeledTerm::Rep { label, .. } => {
            out.insert(label.clone());
        }
        LabeledTerm::Par(l, r) => {
            collect_top(l, out);
            collect_top(r, out);
        }
        LabeledTerm::Res { body, .. } => collect_top(body, out),
    }
}

/// Every label occurring in `e`, `lab(e)`.
pub fn all_labels(e: &LabeledTerm) -> BTreeSet<Label> {
    let mut out = BTreeSet::new();
    e.visit_labels(&mut |l| {
        out.insert(l.clone());
    });
    out
}

/// Every label occurrence in `e`, duplicates included, in structural order.
pub fn label_occurrences(e: &LabeledTerm) -> Vec<Label> {
    let mut out = Vec::new();
    e.visit_labels(&mut |l| out.push(l.clone()));
    out
}

/// The well-formedness predicate: prefixed subterms are images of the
/// labeling function and parallel operands have conflict-free top labels.
pub fn well_formed(e: &LabeledTerm) -> bool {
    match e {
        LabeledTerm::Nil | LabeledTerm::Rep { .. } | LabeledTerm::Success { .. } => true,
        LabeledTerm::Input { label, .. } | LabeledTerm::Output { label, .. } => {
            label_term(&unlabel(e), label) == *e
        }
        LabeledTerm::Par(l, r) => {
            well_formed(l) && well_formed(r) && conflict_free(&top_labels(l), &top_labels(r))
        }
        LabeledTerm::Res { body, .. } => well_formed(body),
    }
}

impl LabeledTerm {
    pub fn par(left: LabeledTerm, right: LabeledTerm) -> LabeledTerm {
        LabeledTerm::Par(Arc::new(left), Arc::new(right))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, LabeledTerm::Nil)
    }

    fn visit_labels(&self, f: &mut impl FnMut(&Label)) {
        match self {
            LabeledTerm::Nil | LabeledTerm::Success { .. } => {}
            LabeledTerm::Input { label, body, .. } | LabeledTerm::Output { label, body, .. } => {
                f(label);
                body.visit_labels(f);
            }
            LabeledTerm::Par(l, r) => {
                l.visit_labels(f);
                r.visit_labels(f);
            }
            LabeledTerm::Res { body, .. } => body.visit_labels(f),
            LabeledTerm::Rep { label, .. } => f(label),
        }
    }

    /// Whether `name` occurs free.
    pub fn has_free(&self, name: &Name) -> bool {
        match self {
            LabeledTerm::Nil => false,
            LabeledTerm::Input {
                chan, binder, body, ..
            } => chan == name || (binder != name && body.has_free(name)),
            LabeledTerm::Output {
                chan, object, body, ..
            } => chan == name || object == name || body.has_free(name),
            LabeledTerm::Par(l, r) => l.has_free(name) || r.has_free(name),
            LabeledTerm::Res { binder, body } => binder != name && body.has_free(name),
            LabeledTerm::Rep { body, .. } | LabeledTerm::Success { body, .. } => {
                body.has_free(name)
            }
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        unlabel(self).free_names()
    }
}

/// Capture-avoiding substitution on labeled terms; labels are untouched.
pub fn substitute_labeled(e: &LabeledTerm, target: &Name, replacement: &Name) -> LabeledTerm {
    if target == replacement || !e.has_free(target) {
        return e.clone();
    }
    let swap = |n: &Name| {
        if n == target {
            replacement.clone()
        } else {
            n.clone()
        }
    };
    let sub = |b: &Arc<LabeledTerm>| Arc::new(substitute_labeled(b, target, replacement));
    match e {
        LabeledTerm::Nil => LabeledTerm::Nil,
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => {
            let (binder, body) = under_binder(binder, body, target, replacement);
            LabeledTerm::Input {
                chan: swap(chan),
                binder,
                label: label.clone(),
                body,
            }
        }
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => LabeledTerm::Output {
            chan: swap(chan),
            object: swap(object),
            label: label.clone(),
            body: sub(body),
        },
        LabeledTerm::Par(l, r) => LabeledTerm::Par(sub(l), sub(r)),
        LabeledTerm::Res { binder, body } => {
            let (binder, body) = under_binder(binder, body, target, replacement);
            LabeledTerm::Res { binder, body }
        }
        LabeledTerm::Rep { label, body } => LabeledTerm::Rep {
            label: label.clone(),
            body: Arc::new(substitute(body, target, replacement)),
        },
        LabeledTerm::Success { seed, body } => LabeledTerm::Success {
            seed: seed.clone(),
            body: Arc::new(substitute(body, target, replacement)),
        },
    }
}

fn under_binder(
    binder: &Name,
    body: &Arc<LabeledTerm>,
    target: &Name,
    replacement: &Name,
) -> (Name, Arc<LabeledTerm>) {
    if binder == target || !body.has_free(target) {
        return (binder.clone(), body.clone());
    }
    if binder == replacement {
        let mut avoid = body.free_names();
        avoid.insert(replacement.clone());
        avoid.insert(target.clone());
        let fresh = binder.fresh(&avoid);
        let renamed = substitute_labeled(body, binder, &fresh);
        return (
            fresh,
            Arc::new(substitute_labeled(&renamed, target, replacement)),
        );
    }
    (
        binder.clone(),
        Arc::new(substitute_labeled(body, target, replacement)),
    )
}

impl fmt::Display for LabeledTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabeledTerm::Par(l, r) => {
                write!(f, "{l} | ")?;
                write_unary(f, r)
            }
            _ => write_unary(f, self),
        }
    }
}

fn write_unary(f: &mut fmt::Formatter<'_>, e: &LabeledTerm) -> fmt::Result {
    match e {
        LabeledTerm::Nil => f.write_str("0"),
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => {
            write!(f, "{chan}({binder})@{label}")?;
            write_cont(f, body)
        }
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => {
            write!(f, "{chan}<{object}>@{label}")?;
            write_cont(f, body)
        }
        LabeledTerm::Par(..) => write!(f, "({e})"),
        LabeledTerm::Res { binder, body } => write!(f, "(nu {binder})({body})"),
        LabeledTerm::Rep { label, body } => match &**body {
            Process::Par(..) => write!(f, "!@{label} ({body})"),
            _ => write!(f, "!@{label} {body}"),
        },
        LabeledTerm::Success { seed, body } => {
            write!(f, "w@{seed}")?;
            match &**body {
                Process::Nil => Ok(()),
                Process::Par(..) => write!(f, ".({body})"),
                _ => write!(f, ".{body}"),
            }
        }
    }
}

fn write_cont(f: &mut fmt::Formatter<'_>, body: &LabeledTerm) -> fmt::Result {
    if body.is_nil() {
        Ok(())
    } else {
        f.write_str(".")?;
        write_unary(f, body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_labeled, parse_observer};

    fn l(text: &str) -> Label {
        text.parse().unwrap()
    }

    fn set(labels: &[&str]) -> BTreeSet<Label> {
        labels.iter().map(|s| l(s)).collect()
    }

    #[test]
    fn label_text_round_trips() {
        assert_eq!(l("01,3"), Label::new(vec![false, true], 3));
        assert_eq!(l(",0"), Label::root());
        assert_eq!(Label::root().to_string(), ",0");
        assert!("2,0".parse::<Label>().is_err());
    }

    #[test]
    fn prefix_relation() {
        assert!(prefix_leq(&[], &[false, true]));
        assert!(prefix_leq(&[false], &[false, true]));
        assert!(!prefix_leq(&[false, true], &[false]));
    }

    #[test]
    fn conflict_freedom() {
        assert!(conflict_free(&set(&["0,0"]), &set(&["1,0"])));
        assert!(!conflict_free(&set(&["0,0"]), &set(&["01,3"])));
        assert!(conflict_free(&BTreeSet::new(), &set(&["0,0", "1,1"])));
    }

    #[test]
    fn labeling_splits_positions_at_parallel() {
        let p = parse_observer("x(y).((nu z)(z(k).0 | z<h>.0)) | a(u).0").unwrap();
        let e = label_term(&p, &Label::root());
        assert_eq!(
            e.to_string(),
            "x(y)@0,0.(nu z)(z(k)@00,1 | z<h>@01,1) | a(u)@1,0"
        );
        assert_eq!(top_labels(&e), set(&["0,0", "1,0"]));
        assert_eq!(all_labels(&e), set(&["0,0", "1,0", "00,1", "01,1"]));
        assert!(well_formed(&e));
    }

    #[test]
    fn labeling_of_nil_and_replication() {
        assert_eq!(label_term(&Process::Nil, &Label::root()), LabeledTerm::Nil);
        let rep = label_term(&parse_observer("!a(x).0").unwrap(), &l("1,2"));
        assert_eq!(
            rep,
            LabeledTerm::Rep {
                label: l("1,2"),
                body: Arc::new(parse_observer("a(x)").unwrap())
            }
        );
        assert_eq!(top_labels(&rep), set(&["1,2"]));
        assert_eq!(all_labels(&rep), set(&["1,2"]));
        assert_eq!(unlabel(&rep), parse_observer("!a(x)").unwrap());
    }

    #[test]
    fn success_prefix_has_no_labels() {
        let o = parse_observer("w.a<b>").unwrap();
        let e = label_term(&o, &Label::root());
        assert!(top_labels(&e).is_empty());
        assert!(all_labels(&e).is_empty());
        assert_eq!(unlabel(&e), o);
        assert!(well_formed(&e));
    }

    #[test]
    fn well_formedness_rejects_conflicting_positions() {
        let e = parse_labeled("x<a>@0,0 | y<b>@0,1").unwrap();
        assert!(!well_formed(&e));
        assert!(well_formed(&LabeledTerm::Nil));
        let bad_depth = parse_labeled("x<a>@0,0.y<b>@0,0").unwrap();
        assert!(!well_formed(&bad_depth));
    }

    #[test]
    fn labeled_printing_round_trips() {
        let p = parse_observer("!(a(x) | b<x>) | (nu c)(c<d>.c(y)) | w.(e<f> | g<h>)").unwrap();
        let e = label_term(&p, &l("1,4"));
        let text = e.to_string();
        assert_eq!(parse_labeled(&text).unwrap(), e, "{text}");
        assert_eq!(unlabel(&e), p);
    }

    #[test]
    fn labeled_substitution_avoids_capture() {
        let e = label_term(&parse_observer("(nu z)(y<z>)").unwrap(), &Label::root());
        let out = substitute_labeled(&e, &"y".into(), &"z".into());
        assert_eq!(out.to_string(), "(nu z')(z<z'>@,0)");
    }
}
