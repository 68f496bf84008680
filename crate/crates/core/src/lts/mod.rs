//! Early operational semantics for unlabeled processes and observers.
//!
//! Transitions are computed compositionally as *moves*: an input move is an
//! abstraction (binder plus continuation) that is instantiated with concrete
//! names only at the top level, an output move is a concretion that may
//! carry an extruded (bound) name. Side conditions on bound names are
//! discharged by renaming to fresh names.

mod graph;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::syntax::{substitute, Name, Process};

pub use graph::{
    build_state_graph, can_report, explore_state_graph, state_key, weak_reach, Caps, LtsError,
    StateGraph,
};

/// A transition label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Action {
    /// `x y`: receive `object` on `chan`.
    FreeInput {
        chan: Name,
        object: Name,
    },
    /// `x̄ y`: send the free name `object` on `chan`.
    FreeOutput {
        chan: Name,
        object: Name,
    },
    /// `x̄(y)`: send the private name `object`, extruding its scope.
    BoundOutput {
        chan: Name,
        object: Name,
    },
    Tau,
    /// The success action; it has no free or bound names.
    Omega,
}

impl Action {
    pub fn free_names(&self) -> BTreeSet<Name> {
        match self {
            Action::FreeInput { chan, object } | Action::FreeOutput { chan, object } => {
                [chan.clone(), object.clone()].into()
            }
            Action::BoundOutput { chan, .. } => [chan.clone()].into(),
            Action::Tau | Action::Omega => BTreeSet::new(),
        }
    }

    pub fn bound_names(&self) -> BTreeSet<Name> {
        match self {
            Action::BoundOutput { object, .. } => [object.clone()].into(),
            _ => BTreeSet::new(),
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::FreeInput { chan, object } => write!(f, "{chan} {object}"),
            Action::FreeOutput { chan, object } => write!(f, "{chan}<{object}>"),
            Action::BoundOutput { chan, object } => write!(f, "{chan}<({object})>"),
            Action::Tau => f.write_str("tau"),
            Action::Omega => f.write_str("w"),
        }
    }
}

/// A one-step behaviour of a term before input names are chosen.
#[derive(Clone, Debug)]
pub(crate) enum Move {
    In {
        chan: Name,
        binder: Name,
        cont: Arc<Process>,
    },
    Out {
        chan: Name,
        object: Name,
        bound: bool,
        cont: Arc<Process>,
    },
    Tau(Arc<Process>),
    Omega(Arc<Process>),
}

/// All moves of `p`, in a deterministic structural order.
pub(crate) fn moves(p: &Process) -> Vec<Move> {
    match p {
        Process::Nil => Vec::new(),
        Process::Input { chan, binder, body } => {
            vec![Move::In {
                chan: chan.clone(),
                binder: binder.clone(),
                cont: body.clone(),
            }]
        }
        Process::Output { chan, object, body } => vec![Move::Out {
            chan: chan.clone(),
            object: object.clone(),
            bound: false,
            cont: body.clone(),
        }],
        Process::Success(body) => vec![Move::Omega(body.clone())],
        Process::Par(l, r) => {
            let left = moves(l);
            let right = moves(r);
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
        Process::Res { binder, body } => moves(body)
            .into_iter()
            .filter_map(|m| restrict(m, binder))
            .collect(),
        Process::Rep(body) => {
            let bang = Arc::new(p.clone());
            moves(body)
                .iter()
                .map(|m| lift(m, &bang, Side::Left))
                .collect()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    /// The moving term is the left operand.
    Left,
    Right,
}

fn compose(side: Side, moved: Arc<Process>, other: &Arc<Process>) -> Arc<Process> {
    match side {
        Side::Left => Arc::new(Process::Par(moved, other.clone())),
        Side::Right => Arc::new(Process::Par(other.clone(), moved)),
    }
}

/// Rename a bound name of a move away from `avoid`-plus-continuation names.
fn freshen(
    name: &Name,
    cont: &Arc<Process>,
    extra: &[&Name],
    other: &Process,
) -> (Name, Arc<Process>) {
    let mut avoid = other.free_names();
    avoid.extend(cont.free_names());
    avoid.extend(extra.iter().map(|n| (*n).clone()));
    let fresh = name.fresh(&avoid);
    let cont = Arc::new(substitute(cont, name, &fresh));
    (fresh, cont)
}

/// The Par rule: put the moving operand back next to `other`.
fn lift(m: &Move, other: &Arc<Process>, side: Side) -> Move {
    match m {
        Move::In { chan, binder, cont } => {
            let (binder, cont) = if other.has_free(binder) {
                freshen(binder, cont, &[chan, binder], other)
            } else {
                (binder.clone(), cont.clone())
            };
            Move::In {
                chan: chan.clone(),
                binder,
                cont: compose(side, cont, other),
            }
        }
        Move::Out {
            chan,
            object,
            bound,
            cont,
        } => {
            let (object, cont) = if *bound && other.has_free(object) {
                freshen(object, cont, &[chan, object], other)
            } else {
                (object.clone(), cont.clone())
            };
            Move::Out {
                chan: chan.clone(),
                object,
                bound: *bound,
                cont: compose(side, cont, other),
            }
        }
        Move::Tau(cont) => Move::Tau(compose(side, cont.clone(), other)),
        Move::Omega(cont) => Move::Omega(compose(side, cont.clone(), other)),
    }
}

/// Com and Close: `out` is an output move of one operand, `inp` an input
/// move of the operand `input_side`. `side` says where the output sits.
fn communicate(out: &Move, inp: &Move, input_side: &Process, side: Side) -> Option<Move> {
    let (
        Move::Out {
            chan,
            object,
            bound,
            cont: out_cont,
        },
        Move::In {
            chan: ichan,
            binder,
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
    let received = Arc::new(substitute(in_cont, binder, &object));
    let body = match side {
        Side::Left => Process::Par(out_cont, received),
        Side::Right => Process::Par(received, out_cont),
    };
    let result = if *bound {
        Process::Res {
            binder: object,
            body: Arc::new(body),
        }
    } else {
        body
    };
    Some(Move::Tau(Arc::new(result)))
}

/// The Res and Open rules for a move of the body of `(nu x)`.
fn restrict(m: Move, x: &Name) -> Option<Move> {
    let wrap = |cont: Arc<Process>| {
        Arc::new(Process::Res {
            binder: x.clone(),
            body: cont,
        })
    };
    match m {
        Move::In { chan, binder, cont } => {
            if &chan == x {
                return None;
            }
            let (binder, cont) = if &binder == x {
                freshen(&binder, &cont, &[x, &chan], &Process::Nil)
            } else {
                (binder, cont)
            };
            Some(Move::In {
                chan,
                binder,
                cont: wrap(cont),
            })
        }
        Move::Out {
            chan,
            object,
            bound,
            cont,
        } => {
            if &chan == x {
                return None;
            }
            if !bound && &object == x {
                return Some(Move::Out {
                    chan,
                    object,
                    bound: true,
                    cont,
                });
            }
            let (object, cont) = if bound && &object == x {
                freshen(&object, &cont, &[x, &chan], &Process::Nil)
            } else {
                (object, cont)
            };
            Some(Move::Out {
                chan,
                object,
                bound,
                cont: wrap(cont),
            })
        }
        Move::Tau(cont) => Some(Move::Tau(wrap(cont))),
        Move::Omega(cont) => Some(Move::Omega(wrap(cont))),
    }
}

/// The default early-input candidates of `p`: its free names plus one fresh name.
pub fn input_candidates(p: &Process) -> BTreeSet<Name> {
    let mut names = p.free_names();
    names.insert(Name::new("z").fresh(&names));
    names
}

/// All one-step transitions of `p`, instantiating inputs with
/// [`input_candidates`].
pub fn step(p: &Process) -> Vec<(Action, Process)> {
    step_with(p, &input_candidates(p))
}

/// All one-step transitions of `p`, instantiating inputs with `candidates`.
pub fn step_with(p: &Process, candidates: &BTreeSet<Name>) -> Vec<(Action, Process)> {
    let mut out = Vec::new();
    for m in moves(p) {
        match m {
            Move::In { chan, binder, cont } => {
                for z in candidates {
                    let target = substitute(&cont, &binder, z);
                    out.push((
                        Action::FreeInput {
                            chan: chan.clone(),
                            object: z.clone(),
                        },
                        target,
                    ));
                }
            }
            Move::Out {
                chan,
                object,
                bound,
                cont,
            } => {
                let action = if bound {
                    Action::BoundOutput { chan, object }
                } else {
                    Action::FreeOutput { chan, object }
                };
                out.push((action, (*cont).clone()));
            }
            Move::Tau(cont) => out.push((Action::Tau, (*cont).clone())),
            Move::Omega(cont) => out.push((Action::Omega, (*cont).clone())),
        }
    }
    out
}

/// The τ-successors of `p`.
pub fn tau_successors(p: &Process) -> Vec<Process> {
    moves(p)
        .into_iter()
        .filter_map(|m| match m {
            Move::Tau(cont) => Some((*cont).clone()),
            _ => None,
        })
        .collect()
}

/// Whether `p` can perform ω immediately.
pub fn success_enabled(p: &Process) -> bool {
    moves(p).iter().any(|m| matches!(m, Move::Omega(_)))
}

/// Whether `p` has no transitions of any kind.
pub fn is_inert(p: &Process) -> bool {
    moves(p).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{canonicalize, parse_observer};

    fn p(text: &str) -> Process {
        parse_observer(text).unwrap()
    }

    fn keys(ts: &[(Action, Process)]) -> Vec<(Action, String)> {
        let mut out: Vec<_> = ts
            .iter()
            .map(|(a, q)| (a.clone(), canonicalize(q).key().to_string()))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn communication_substitutes_the_sent_name() {
        let ts = step(&p("a<b>.0 | a(x).x<c>.0"));
        let taus: Vec<_> = ts.iter().filter(|(a, _)| a.is_tau()).collect();
        assert_eq!(taus.len(), 1);
        assert_eq!(taus[0].1, Process::par(Process::Nil, p("b<c>")));
    }

    #[test]
    fn open_extrudes_restricted_object() {
        let ts = step(&p("(nu y)(a<y>.0)"));
        assert_eq!(ts.len(), 1);
        assert_eq!(
            ts[0].0,
            Action::BoundOutput {
                chan: "a".into(),
                object: "y".into()
            }
        );
        assert_eq!(ts[0].1, Process::Nil);
    }

    #[test]
    fn replicated_input_offers_one_transition_per_candidate() {
        let src = p("!a(x).0");
        let ts = step(&src);
        let candidates = input_candidates(&src);
        assert_eq!(candidates.len(), 2);
        assert_eq!(ts.len(), 2);
        for ((action, target), z) in ts.iter().zip(&candidates) {
            assert_eq!(
                action,
                &Action::FreeInput {
                    chan: "a".into(),
                    object: z.clone()
                }
            );
            assert_eq!(target, &Process::par(Process::Nil, src.clone()));
        }
    }

    #[test]
    fn nil_has_no_transitions() {
        assert!(step(&Process::Nil).is_empty());
    }

    #[test]
    fn close_rebinds_the_extruded_name() {
        let ts = step(&p("(nu y)(a<y>.y<c>) | a(x).x(z)"));
        let taus: Vec<_> = ts.into_iter().filter(|(a, _)| a.is_tau()).collect();
        assert_eq!(taus.len(), 1);
        assert_eq!(
            canonicalize(&taus[0].1),
            canonicalize(&p("(nu y)(y<c> | y(z))"))
        );
    }

    #[test]
    fn close_avoids_capturing_free_names_of_the_receiver() {
        let ts = step(&p("(nu y)(a<y>.y<c>) | a(x).y<x>"));
        let tau = ts.into_iter().find(|(a, _)| a.is_tau()).unwrap().1;
        assert_eq!(canonicalize(&tau), canonicalize(&p("(nu q)(q<c> | y<q>)")));
    }

    #[test]
    fn restricted_channel_blocks_and_restriction_renames_received_names() {
        assert!(step(&p("(nu a)(a(x).w)")).is_empty());
        let ts = step(&p("(nu y)(a(x).x<y>)"));
        for (action, target) in &ts {
            if let Action::FreeInput { object, .. } = action {
                if object.as_str() == "y" {
                    assert_eq!(canonicalize(target), canonicalize(&p("(nu q)(y<q>)")));
                }
            }
        }
    }

    #[test]
    fn replication_never_communicates_with_itself() {
        // Only the body's own synchronisation; copies never talk to each other.
        let ts = step(&p("!(a<b> | a(x))"));
        assert_eq!(ts.iter().filter(|(a, _)| a.is_tau()).count(), 1);
        assert!(step(&p("!a<b> | !c(x)")).iter().all(|(a, _)| !a.is_tau()));
        let ts = step(&p("!(nu c)(c<b> | c(x))"));
        assert_eq!(ts.iter().filter(|(a, _)| a.is_tau()).count(), 1);
    }

    #[test]
    fn success_prefix_fires_omega() {
        let ts = step(&p("w.a<b>"));
        assert_eq!(keys(&ts), vec![(Action::Omega, "a<b>".to_string())]);
        assert!(success_enabled(&p("a<b> | w")));
        assert!(!success_enabled(&p("a(x).w")));
    }

    #[test]
    fn inertness_is_absence_of_moves() {
        assert!(is_inert(&p("(nu b)(b(x).a<c>)")));
        assert!(is_inert(&p("!0")));
        assert!(!is_inert(&p("a<c>")));
    }

    #[test]
    fn action_names() {
        let bo = Action::BoundOutput {
            chan: "a".into(),
            object: "y".into(),
        };
        assert_eq!(bo.bound_names(), ["y".into()].into());
        assert_eq!(bo.free_names(), ["a".into()].into());
        assert!(Action::Omega.free_names().is_empty());
        assert!(Action::Omega.bound_names().is_empty());
    }
}
