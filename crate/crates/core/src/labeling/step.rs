//! Labeled operational semantics with fired-label bookkeeping.
//!
//! The rules mirror the unlabeled ones, ignoring labels, except for
//! replication: `!⟨s,n⟩P` moves like `P` and becomes
//! `L⟨s0,n+1⟩(P') | !⟨s1,n+1⟩P`. Each move records the labels of the
//! prefixes or replications that produced it.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{label_term, substitute_labeled, unlabel, Label, LabeledTerm};
use crate::lts::{input_candidates, moves, Action, Move};
use crate::syntax::{Name, Process};

/// One labeled transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTransition {
    pub action: Action,
    /// Labels consumed by the transition: one for a visible action, two for a
    /// synchronisation, the replication label for a τ internal to a
    /// replicated body, none for ω.
    pub fired: BTreeSet<Label>,
    pub target: LabeledTerm,
}

#[derive(Clone, Debug)]
pub(crate) enum LMove {
    In {
        chan: Name,
        binder: Name,
        label: Label,
        cont: Arc<LabeledTerm>,
    },
    Out {
        chan: Name,
        object: Name,
        bound: bool,
        label: Label,
        cont: Arc<LabeledTerm>,
    },
    Tau {
        fired: Vec<Label>,
        cont: Arc<LabeledTerm>,
    },
    Omega(Arc<LabeledTerm>),
}

/// All labeled moves of `e`, in the same structural order as the
/// unlabeled moves of `unlabel(e)`.
pub(crate) fn labeled_moves(e: &LabeledTerm) -> Vec<LMove> {
    match e {
        LabeledTerm::Nil => Vec::new(),
        LabeledTerm::Input {
            chan,
            binder,
            label,
            body,
        } => vec![LMove::In {
            chan: chan.clone(),
            binder: binder.clone(),
            label: label.clone(),
            cont: body.clone(),
        }],
        LabeledTerm::Output {
            chan,
            object,
            label,
            body,
        } => vec![LMove::Out {
            chan: chan.clone(),
            object: object.clone(),
            bound: false,
            label: label.clone(),
            cont: body.clone(),
        }],
        LabeledTerm::Success { seed, body } => vec![LMove::Omega(Arc::new(label_term(body, seed)))],
        LabeledTerm::Par(l, r) => {
            let left = labeled_moves(l);
            let right = labeled_moves(r);
            let mut out = Vec::new();
            for m in &left {
                out.push(lift(m, r, Side::Left));
            }
            for m in &right {
                out.push(lift(m, l, Side::Right));
            }
            for a in &left {
                for b in &right {
                    if let Some(t) = communicate(a, b, r, Side::Left) {
                        out.push(t);
                    }
                    if let Some(t) = communicate(b, a, l, Side::Right) {
                        out.push(t);
                    }
                }
            }
            out
        }
        LabeledTerm::Res { binder, body } => labeled_moves(body)
            .into_iter()
            .filter_map(|m| restrict(m, binder))
            .collect(),
        LabeledTerm::Rep { label, body } => {
            let copy = Arc::new(LabeledTerm::Rep {
                label: label.child(true).deeper(),
                body: body.clone(),
            });
            let seed = label.child(false).deeper();
            moves(body)
                .into_iter()
                .map(|m| unfold(m, label, &seed, &copy))
                .collect()
        }
    }
}

/// The replication rule for one unlabeled move of the body.
fn unfold(m: Move, label: &Label, seed: &Label, copy: &Arc<LabeledTerm>) -> LMove {
    let spawned = |cont: &Process| Arc::new(label_term(cont, seed));
    let lm = match m {
        Move::In { chan, binder, cont } => LMove::In {
            chan,
            binder,
            label: label.clone(),
            cont: spawned(&cont),
        },
        Move::Out {
            chan,
            object,
            bound,
            cont,
        } => LMove::Out {
            chan,
            object,
            bound,
            label: label.clone(),
            cont: spawned(&cont),
        },
        Move::Tau(cont) => LMove::Tau {
            fired: vec![label.clone()],
            cont: spawned(&cont),
        },
        Move::Omega(cont) => LMove::Omega(spawned(&cont)),
    };
    lift(&lm, copy, Side::Left)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

fn compose(side: Side, moved: Arc<LabeledTerm>, other: &Arc<LabeledTerm>) -> Arc<LabeledTerm> {
    match side {
        Side::Left => Arc::new(LabeledTerm::Par(moved, other.clone())),
        Side::Right => Arc::new(LabeledTerm::Par(other.clone(), moved)),
    }
}

fn freshen(
    name: &Name,
    cont: &Arc<LabeledTerm>,
    extra: &[&Name],
    other: &LabeledTerm,
) -> (Name, Arc<LabeledTerm>) {
    let mut avoid = other.free_names();
    avoid.extend(cont.free_names());
    avoid.extend(extra.iter().map(|n| (*n).clone()));
    let fresh = name.fresh(&avoid);
    let cont = Arc::new(substitute_labeled(cont, name, &fresh));
    (fresh, cont)
}

fn lift(m: &LMove, other: &Arc<LabeledTerm>, side: Side) -> LMove {
    match m {
        LMove::In {
            chan,
            binder,
            label,
            cont,
        } => {
            let (binder, cont) = if other.has_free(binder) {
                freshen(binder, cont, &[chan, binder], other)
            } else {
                (binder.clone(), cont.clone())
            };
            LMove::In {
                chan: chan.clone(),
                binder,
                label: label.clone(),
                cont: compose(side, cont, other),
            }
        }
        LMove::Out {
            chan,
            object,
            bound,
            label,
            cont,
        } => {
            let (object, cont) = if *bound && other.has_free(object) {
                freshen(object, cont, &[chan, object], other)
            } else {
                (object.clone(), cont.clone())
            };
            LMove::Out {
                chan: chan.clone(),
                object,
                bound: *bound,
                label: label.clone(),
                cont: compose(side, cont, other),
            }
        }
        LMove::Tau { fired, cont } => LMove::Tau {
            fired: fired.clone(),
            cont: compose(side, cont.clone(), other),
        },
        LMove::Omega(cont) => LMove::Omega(compose(side, cont.clone(), other)),
    }
}

fn communicate(out: &LMove, inp: &LMove, input_side: &LabeledTerm, side: Side) -> Option<LMove> {
    let (
        LMove::Out {
            chan,
            object,
            bound,
            label: out_label,
            cont: out_cont,
        },
        LMove::In {
            chan: ichan,
            binder,
            label: in_label,
            cont: in_cont,
        },
    ) = (out, inp)
    else {
        return None;
    };
    if chan != ichan {
        return None;
    }
    let (object, out_cont) = if *bound && input_side.has_free(object) {
        freshen(object, out_cont, &[chan, object], input_side)
    } else {
        (object.clone(), out_cont.clone())
    };
    let received = Arc::new(substitute_labeled(in_cont, binder, &object));
    let body = match side {
        Side::Left => LabeledTerm::Par(out_cont, received),
        Side::Right => LabeledTerm::Par(received, out_cont),
    };
    let cont = if *bound {
        LabeledTerm::Res {
            binder: object,
            body: Arc::new(body),
        }
    } else {
        body
    };
    Some(LMove::Tau {
        fired: vec![out_label.clone(), in_label.clone()],
        cont: Arc::new(cont),
    })
}

fn restrict(m: LMove, x: &Name) -> Option<LMove> {
    let wrap = |cont: Arc<LabeledTerm>| {
        Arc::new(LabeledTerm::Res {
            binder: x.clone(),
            body: cont,
        })
    };
    match m {
        LMove::In {
            chan,
            binder,
            label,
            cont,
        } => {
            if &chan == x {
                return None;
            }
            let (binder, cont) = if &binder == x {
                freshen(&binder, &cont, &[x, &chan], &LabeledTerm::Nil)
            } else {
                (binder, cont)
            };
            Some(LMove::In {
                chan,
                binder,
                label,
                cont: wrap(cont),
            })
        }
        LMove::Out {
            chan,
            object,
            bound,
            label,
            cont,
        } => {
            if &chan == x {
                return None;
            }
            if !bound && &object == x {
                return Some(LMove::Out {
                    chan,
                    object,
                    bound: true,
                    label,
                    cont,
                });
            }
            let (object, cont) = if bound && &object == x {
                freshen(&object, &cont, &[x, &chan], &LabeledTerm::Nil)
            } else {
                (object, cont)
            };
            Some(LMove::Out {
                chan,
                object,
                bound,
                label,
                cont: wrap(cont),
            })
        }
        LMove::Tau { fired, cont } => Some(LMove::Tau {
            fired,
            cont: wrap(cont),
        }),
        LMove::Omega(cont) => Some(LMove::Omega(wrap(cont))),
    }
}

/// All labeled transitions of `e`, instantiating inputs with the free
/// names of `e` plus one fresh name.
pub fn labeled_step(e: &LabeledTerm) -> Vec<LabeledTransition> {
    labeled_step_with(e, &input_candidates(&unlabel(e)))
}

/// All labeled transitions of `e`, instantiating inputs with `candidates`.
pub fn labeled_step_with(e: &LabeledTerm, candidates: &BTreeSet<Name>) -> Vec<LabeledTransition> {
    let mut out = Vec::new();
    for m in labeled_moves(e) {
        match m {
            LMove::In {
                chan,
                binder,
                label,
                cont,
            } => {
                for z in candidates {
                    out.push(LabeledTransition {
                        action: Action::FreeInput {
                            chan: chan.clone(),
                            object: z.clone(),
                        },
                        fired: BTreeSet::from([label.clone()]),
                        target: substitute_labeled(&cont, &binder, z),
                    });
                }
            }
            LMove::Out {
                chan,
                object,
                bound,
                label,
                cont,
            } => {
                let action = if bound {
                    Action::BoundOutput { chan, object }
                } else {
                    Action::FreeOutput { chan, object }
                };
                out.push(LabeledTransition {
                    action,
                    fired: BTreeSet::from([label]),
                    target: (*cont).clone(),
                });
            }
            LMove::Tau { fired, cont } => out.push(LabeledTransition {
                action: Action::Tau,
                fired: fired.into_iter().collect(),
                target: (*cont).clone(),
            }),
            LMove::Omega(cont) => out.push(LabeledTransition {
                action: Action::Omega,
                fired: BTreeSet::new(),
                target: (*cont).clone(),
            }),
        }
    }
    out
}

/// The τ-transitions of `e`, in enumeration order. Computations and
/// certificates refer to transitions by their index in this list.
pub fn tau_steps(e: &LabeledTerm) -> Vec<LabeledTransition> {
    labeled_moves(e)
        .into_iter()
        .filter_map(|m| match m {
            LMove::Tau { fired, cont } => Some(LabeledTransition {
                action: Action::Tau,
                fired: fired.into_iter().collect(),
                target: (*cont).clone(),
            }),
            _ => None,
        })
        .collect()
}

/// The live labels `Ll(e)`: labels fired by some τ-transition of `e`.
pub fn live_labels(e: &LabeledTerm) -> BTreeSet<Label> {
    let mut out = BTreeSet::new();
    for m in labeled_moves(e) {
        if let LMove::Tau { fired, .. } = m {
            out.extend(fired);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{all_labels, top_labels, well_formed};
    use crate::syntax::{parse_labeled, parse_observer};

    fn l(text: &str) -> Label {
        text.parse().unwrap()
    }

    #[test]
    fn replication_consumes_its_label_and_spawns_fresh_ones() {
        let e = parse_labeled("!@1,2 a(x)").unwrap();
        let ts = labeled_step(&e);
        assert!(!ts.is_empty());
        for t in &ts {
            assert!(matches!(t.action, Action::FreeInput { .. }));
            assert_eq!(t.fired, BTreeSet::from([l("1,2")]));
            assert_eq!(t.target.to_string(), "0 | !@11,3 a(x)");
        }
        let spawning = parse_labeled("!@,0 a(x).b<x>").unwrap();
        let t = &labeled_step(&spawning)[0];
        assert_eq!(all_labels(&t.target), BTreeSet::from([l("0,1"), l("1,1")]));
    }

    #[test]
    fn synchronisation_fires_both_labels() {
        let e = parse_labeled("a<b>@0,0 | a(x)@1,0").unwrap();
        let taus = tau_steps(&e);
        assert_eq!(taus.len(), 1);
        assert_eq!(taus[0].fired, BTreeSet::from([l("0,0"), l("1,0")]));
        assert_eq!(live_labels(&e), BTreeSet::from([l("0,0"), l("1,0")]));
    }

    #[test]
    fn success_fires_nothing() {
        let e = label_term(&parse_observer("w.a<b>").unwrap(), &Label::root());
        let ts = labeled_step(&e);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].action, Action::Omega);
        assert!(ts[0].fired.is_empty());
        assert_eq!(ts[0].target.to_string(), "a<b>@,0");
    }

    #[test]
    fn restricted_input_is_not_live() {
        let e = parse_labeled("(nu b)(b(k)@0,0)").unwrap();
        assert!(live_labels(&e).is_empty());
        assert!(live_labels(&LabeledTerm::Nil).is_empty());
    }

    #[test]
    fn live_labels_of_observer_experiment() {
        let e = label_term(&parse_observer("a<b> | a(x).w").unwrap(), &Label::root());
        assert_eq!(live_labels(&e), BTreeSet::from([l("0,0"), l("1,0")]));
    }

    #[test]
    fn internal_replication_step_fires_the_replication_label() {
        let e = label_term(&parse_observer("!(nu c)(c<u> | c(x))").unwrap(), &l("1,0"));
        let taus = tau_steps(&e);
        assert_eq!(taus.len(), 1);
        assert_eq!(taus[0].fired, BTreeSet::from([l("1,0")]));
        assert!(well_formed(&taus[0].target));
    }

    #[test]
    fn targets_stay_well_formed_and_fired_labels_vanish() {
        let p = parse_observer("(nu b)(b<u> | !b(x).(a<u> | b<u>)) | !a(x) | a(x).w").unwrap();
        let mut e = label_term(&p, &Label::root());
        for _ in 0..6 {
            let taus = tau_steps(&e);
            let t = taus.last().unwrap().clone();
            assert!(t.fired.is_subset(&top_labels(&e)));
            assert!(t.fired.is_disjoint(&all_labels(&t.target)));
            assert!(well_formed(&t.target), "{}", t.target);
            e = t.target;
        }
    }
}
