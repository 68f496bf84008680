//! Normal forms of labeled terms and matching up to relabeling.
//!
//! [`normalize`] applies exactly the unlabeled canonicalisation, keeping
//! labels attached to their prefixes; components whose erasures coincide
//! are ordered by their labeled text. Consequently the τ-transitions of two
//! normal forms with equal erasures are enumerated in corresponding order.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{all_labels, labeled_moves, unlabel, Label, LabeledTerm};
use crate::syntax::{assemble, binder_base, cont_text, lookup, norm, unary_text, Name};

/// A relabeling: a finite map between labels.
pub type LabelMap = BTreeMap<Label, Label>;

struct Item {
    erased: String,
    text: String,
    term: Arc<LabeledTerm>,
}

/// Canonical form of a labeled term: the unlabeled canonicalisation with
/// labels carried along.
pub fn normalize(e: &LabeledTerm) -> LabeledTerm {
    let base = binder_base(&unlabel(e));
    let (_, term) = lassemble(lnorm(e, &mut Vec::new(), base));
    (*term).clone()
}

/// The canonical key of the erasure of `e`.
pub fn erased_key(e: &LabeledTerm) -> String {
    crate::syntax::canonicalize(&unlabel(e)).key().to_string()
}

/// Normalise and remove top-level components that have no transitions at
/// all, returning the labels of the removed components.
pub fn normalize_inert(e: &LabeledTerm) -> (LabeledTerm, BTreeSet<Label>) {
    let normal = normalize(e);
    let mut parts = Vec::new();
    flatten(&normal, &mut parts);
    let (inert, alive): (Vec<_>, Vec<_>) =
        parts.into_iter().partition(|c| labeled_moves(c).is_empty());
    if inert.is_empty() {
        return (normal, BTreeSet::new());
    }
    let dead = inert.iter().flat_map(all_labels).collect();
    let rest = alive
        .into_iter()
        .reduce(|l, r| LabeledTerm::Par(Arc::new(l), Arc::new(r)))
        .unwrap_or(LabeledTerm::Nil);
    (normalize(&rest), dead)
}

/// Top-level parallel components of `e`, excluding `0`.
pub fn components(e: &LabeledTerm) -> Vec<LabeledTerm> {
    let mut out = Vec::new();
    flatten(e, &mut out);
    out
}

fn flatten(e: &LabeledTerm, out: &mut Vec<LabeledTerm>) {
    match e {
        LabeledTerm::Nil => {}
        LabeledTerm::Par(l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        _ => out.push(e.clone()),
    }
}

fn lnorm(e: &LabeledTerm, env: &mut Vec<(Name, Name)>, depth: usize) -> Vec<Item> {
    let item = |erased: String, term: LabeledTerm| {
        let text = term.to_string();
        vec![Item {
            erased,
            text,
            term: Arc::new(term),
        }]
    };
    match e {
        LabeledTerm::Nil => Vec::new(),
        LabeledTerm::Par(l, r) => {
            let mut parts = lnorm(l, env, depth);
            parts.extend(lnorm(r, env, depth));
            parts
        }
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => {
            let chan = lookup(env, chan);
            let fresh = Name::canonical(depth);
            env.push((binder.clone(), fresh.clone()));
            let (erased, body) = lassemble(lnorm(body, env, depth + 1));
            env.pop();
            let erased = format!("{chan}({fresh}){}", lcont_text(&erased, &body));
            item(
                erased,
                LabeledTerm::Input {
                    chan,
                    binder: fresh,
                    label: label.clone(),
                    body,
                },
            )
        }
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => {
            let chan = lookup(env, chan);
            let object = lookup(env, object);
            let (erased, body) = lassemble(lnorm(body, env, depth));
            let erased = format!("{chan}<{object}>{}", lcont_text(&erased, &body));
            item(
                erased,
                LabeledTerm::Output {
                    chan,
                    object,
                    label: label.clone(),
                    body,
                },
            )
        }
        LabeledTerm::Rep { label, body } => {
            let (text, body) = assemble(norm(body, env, depth));
            let erased = format!("!{}", unary_text(&text, &body));
            item(
                erased,
                LabeledTerm::Rep {
                    label: label.clone(),
                    body,
                },
            )
        }
        LabeledTerm::Success { seed, body } => {
            let (text, body) = assemble(norm(body, env, depth));
            let erased = format!("w{}", cont_text(&text, &body));
            item(
                erased,
                LabeledTerm::Success {
                    seed: seed.clone(),
                    body,
                },
            )
        }
        LabeledTerm::Res { binder, body } => {
            let fresh = Name::canonical(depth);
            env.push((binder.clone(), fresh.clone()));
            let parts = lnorm(body, env, depth + 1);
            env.pop();
            let (inside, outside): (Vec<_>, Vec<_>) =
                parts.into_iter().partition(|it| it.term.has_free(&fresh));
            let mut out: Vec<Item> = outside
                .iter()
                .flat_map(|it| lnorm(&it.term, &mut Vec::new(), depth))
                .collect();
            if !inside.is_empty() {
                let (erased, body) = lassemble(inside);
                let erased = format!("(nu {fresh})({erased})");
                out.extend(item(
                    erased,
                    LabeledTerm::Res {
                        binder: fresh,
                        body,
                    },
                ));
            }
            out
        }
    }
}

fn lcont_text(text: &str, body: &LabeledTerm) -> String {
    match body {
        LabeledTerm::Nil => String::new(),
        LabeledTerm::Par(..) => format!(".({text})"),
        _ => format!(".{text}"),
    }
}

fn lassemble(mut parts: Vec<Item>) -> (String, Arc<LabeledTerm>) {
    parts.sort_by(|a, b| (&a.erased, &a.text).cmp(&(&b.erased, &b.text)));
    let mut iter = parts.into_iter();
    let Some(first) = iter.next() else {
        return ("0".to_string(), Arc::new(LabeledTerm::Nil));
    };
    let (mut erased, mut term) = (first.erased, first.term);
    for it in iter {
        erased.push_str(" | ");
        erased.push_str(&it.erased);
        term = Arc::new(LabeledTerm::Par(term, it.term));
    }
    (erased, term)
}

/// Apply `map` to every label of `e`; unmapped labels are kept.
pub fn relabel(e: &LabeledTerm, map: &LabelMap) -> LabeledTerm {
    let m = |l: &Label| map.get(l).cloned().unwrap_or_else(|| l.clone());
    match e {
        LabeledTerm::Nil => LabeledTerm::Nil,
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => LabeledTerm::Input {
            chan: chan.clone(),
            binder: binder.clone(),
            label: m(label),
            body: Arc::new(relabel(body, map)),
        },
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => LabeledTerm::Output {
            chan: chan.clone(),
            object: object.clone(),
            label: m(label),
            body: Arc::new(relabel(body, map)),
        },
        LabeledTerm::Par(l, r) => {
            LabeledTerm::Par(Arc::new(relabel(l, map)), Arc::new(relabel(r, map)))
        }
        LabeledTerm::Res { binder, body } => LabeledTerm::Res {
            binder: binder.clone(),
            body: Arc::new(relabel(body, map)),
        },
        LabeledTerm::Rep { label, body } => LabeledTerm::Rep {
            label: m(label),
            body: body.clone(),
        },
        LabeledTerm::Success { seed, body } => LabeledTerm::Success {
            seed: seed.clone(),
            body: body.clone(),
        },
    }
}

/// Replace every success seed by `⟨ε,0⟩`. Seeds are not labels; they are
/// ignored when states are compared up to relabeling.
fn strip_seeds(e: &LabeledTerm) -> LabeledTerm {
    match e {
        LabeledTerm::Nil | LabeledTerm::Rep { .. } => e.clone(),
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => LabeledTerm::Input {
            chan: chan.clone(),
            binder: binder.clone(),
            label: label.clone(),
            body: Arc::new(strip_seeds(body)),
        },
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => LabeledTerm::Output {
            chan: chan.clone(),
            object: object.clone(),
            label: label.clone(),
            body: Arc::new(strip_seeds(body)),
        },
        LabeledTerm::Par(l, r) => {
            LabeledTerm::Par(Arc::new(strip_seeds(l)), Arc::new(strip_seeds(r)))
        }
        LabeledTerm::Res { binder, body } => LabeledTerm::Res {
            binder: binder.clone(),
            body: Arc::new(strip_seeds(body)),
        },
        LabeledTerm::Success { body, .. } => LabeledTerm::Success {
            seed: Label::root(),
            body: body.clone(),
        },
    }
}

/// Whether relabeling `from` by `map` yields `to`, up to normalisation and
/// success seeds.
pub fn relabel_matches(from: &LabeledTerm, to: &LabeledTerm, map: &LabelMap) -> bool {
    normalize(&strip_seeds(&relabel(from, map))) == normalize(&strip_seeds(to))
}

/// Find a label bijection `β` with `β(e1) = e2` up to normalisation.
///
/// Succeeds iff the erasures have the same canonical form. Among identical
/// sibling components the pairing is chosen greedily to keep as many labels
/// fixed as possible. Labels in `pinned` must be mapped to themselves.
pub fn match_up_to_relabeling(
    e1: &LabeledTerm,
    e2: &LabeledTerm,
    pinned: &BTreeSet<Label>,
) -> Option<LabelMap> {
    let a = normalize(&strip_seeds(e1));
    let b = normalize(&strip_seeds(e2));
    if erased_key(&a) != erased_key(&b) {
        return None;
    }
    let mut map = LabelMap::new();
    zip(&a, &b, &mut map)?;
    if pinned.iter().any(|v| map.get(v).is_some_and(|w| w != v)) {
        return None;
    }
    Some(map)
}

fn zip(a: &LabeledTerm, b: &LabeledTerm, map: &mut LabelMap) -> Option<()> {
    match (a, b) {
        (LabeledTerm::Nil, LabeledTerm::Nil)
        | (LabeledTerm::Success { .. }, LabeledTerm::Success { .. }) => Some(()),
        (
            LabeledTerm::Input {
                label: la,
                body: ba,
                ..
            },
            LabeledTerm::Input {
                label: lb,
                body: bb,
                ..
            },
        )
        | (
            LabeledTerm::Output {
                label: la,
                body: ba,
                ..
            },
            LabeledTerm::Output {
                label: lb,
                body: bb,
                ..
            },
        ) => {
            map.insert(la.clone(), lb.clone());
            zip(ba, bb, map)
        }
        (LabeledTerm::Rep { label: la, .. }, LabeledTerm::Rep { label: lb, .. }) => {
            map.insert(la.clone(), lb.clone());
            Some(())
        }
        (LabeledTerm::Res { body: ba, .. }, LabeledTerm::Res { body: bb, .. }) => zip(ba, bb, map),
        (LabeledTerm::Par(..), LabeledTerm::Par(..)) => zip_components(a, b, map),
        _ => None,
    }
}

fn zip_components(a: &LabeledTerm, b: &LabeledTerm, map: &mut LabelMap) -> Option<()> {
    let xs = components(a);
    let ys = components(b);
    if xs.len() != ys.len() {
        return None;
    }
    let kx: Vec<String> = xs.iter().map(|x| unlabel(x).to_string()).collect();
    let ky: Vec<String> = ys.iter().map(|y| unlabel(y).to_string()).collect();
    let mut start = 0;
    while start < xs.len() {
        let mut end = start + 1;
        while end < xs.len() && kx[end] == kx[start] {
            end += 1;
        }
        if ky[start..end].iter().any(|k| k != &kx[start]) {
            return None;
        }
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for (i, x) in xs.iter().enumerate().take(end).skip(start) {
            let lx = all_labels(x);
            for (j, y) in ys.iter().enumerate().take(end).skip(start) {
                pairs.push((lx.intersection(&all_labels(y)).count(), i, j));
            }
        }
        pairs.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut left_used = vec![false; end - start];
        let mut right_used = vec![false; end - start];
        for (_, i, j) in pairs {
            if !left_used[i - start] && !right_used[j - start] {
                left_used[i - start] = true;
                right_used[j - start] = true;
                zip(&xs[i], &ys[j], map)?;
            }
        }
        start = end;
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::label_term;
    use crate::syntax::{canonicalize, parse_labeled, parse_observer};

    fn l(text: &str) -> Label {
        text.parse().unwrap()
    }

    #[test]
    fn normal_form_erases_to_canonical_form() {
        for text in [
            "(nu b)(b<y> | !b(x).b<x>) | a<c> | a(x).w",
            "x(y).((nu z)(z(k) | z<h>)) | a(u) | 0",
            "(nu x)(a<b> | x<c> | (nu y)(y<x>))",
            "!(a<b> | c(d)) | w.(e<f>)",
        ] {
            let p = parse_observer(text).unwrap();
            let e = label_term(&p, &Label::root());
            let n = normalize(&e);
            assert_eq!(unlabel(&n).to_string(), canonicalize(&p).key(), "{text}");
            assert_eq!(all_labels(&n), all_labels(&e));
            assert_eq!(normalize(&n), n);
        }
    }

    #[test]
    fn identical_siblings_are_ordered_by_labels() {
        let a = normalize(&parse_labeled("a<b>@1,0 | a<b>@0,0").unwrap());
        assert_eq!(a.to_string(), "a<b>@0,0 | a<b>@1,0");
    }

    #[test]
    fn inert_components_are_removed_with_their_labels() {
        let e = parse_labeled("(nu b)(b(k)@00,1.a<c>@00,2) | a<c>@1,0").unwrap();
        let (rest, dead) = normalize_inert(&e);
        assert_eq!(rest.to_string(), "a<c>@1,0");
        assert_eq!(dead, BTreeSet::from([l("00,1"), l("00,2")]));
        let (same, none) = normalize_inert(&rest);
        assert_eq!(same, rest);
        assert!(none.is_empty());
    }

    #[test]
    fn matching_finds_relabeling() {
        let e1 = parse_labeled("!@0,1 a(x) | a<u>@10,2 | a(x)@11,0.w@11,1").unwrap();
        let e2 = parse_labeled("!@0,3 a(x) | a<u>@10,5 | a(x)@11,0.w@11,1").unwrap();
        let map = match_up_to_relabeling(&e1, &e2, &BTreeSet::from([l("11,0")])).unwrap();
        assert_eq!(map[&l("0,1")], l("0,3"));
        assert_eq!(map[&l("10,2")], l("10,5"));
        assert_eq!(map[&l("11,0")], l("11,0"));
        assert!(relabel_matches(&e1, &e2, &map));
        let identity = match_up_to_relabeling(&e1, &e1, &BTreeSet::new()).unwrap();
        assert!(identity.iter().all(|(k, v)| k == v));
        assert!(match_up_to_relabeling(&e1, &e2, &BTreeSet::from([l("0,1")])).is_none());
        let other = parse_labeled("a<u>@,0").unwrap();
        assert!(match_up_to_relabeling(&e1, &other, &BTreeSet::new()).is_none());
    }

    #[test]
    fn matching_prefers_fixed_labels_among_identical_siblings() {
        let e1 = parse_labeled("a<b>@00,0 | a<b>@01,0").unwrap();
        let e2 = parse_labeled("a<b>@01,0 | a<b>@10,0").unwrap();
        let map = match_up_to_relabeling(&e1, &e2, &BTreeSet::new()).unwrap();
        assert_eq!(map[&l("01,0")], l("01,0"));
        assert_eq!(map[&l("00,0")], l("10,0"));
    }
}
