//! Computations over labeled experiments, fair schedulers and lasso
//! certificates.
//!
//! A computation moves between *labeled states*: terms in normal form with
//! inert top-level components removed (see [`normalize_inert`]). Steps are
//! identified by their index in [`tau_steps`] of the current state, so a
//! computation is fully described by its start term and an index sequence.

mod certificate;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::labeling::{
    all_labels, erased_key, tau_steps, unlabel, Label, LabeledTerm, LabeledTransition,
};
use crate::lts::success_enabled;

pub use crate::labeling::{match_up_to_relabeling, normalize_inert};
pub use certificate::{
    validate_certificate, FairnessClass, LassoCertificate, Mode, Validation, CERTIFICATE_SCHEMA,
};

/// One τ-step of a computation.
#[derive(Clone, Debug)]
pub struct Step {
    /// Index of the transition among the τ-steps of the source state.
    pub index: usize,
    pub fired: BTreeSet<Label>,
    /// The labeled state reached.
    pub state: LabeledTerm,
    /// Labels of inert components removed after the step.
    pub dead: BTreeSet<Label>,
}

/// How a computation ended.
#[derive(Clone, Debug)]
pub enum Ending {
    /// The last state has no τ-transition.
    Maximal,
    /// The last state can perform ω: the test has been passed, so the run
    /// goes no further.
    Success,
    /// The step budget ran out.
    Truncated,
    /// The policy declined to continue.
    Stopped,
    /// The run recurred; the certificate describes its periodic extension.
    Lasso(Box<LassoCertificate>, FairnessClass),
}

/// A finite τ-computation from a labeled state.
#[derive(Clone, Debug)]
pub struct Computation {
    pub start: LabeledTerm,
    /// Labels of inert components removed from the initial term.
    pub start_dead: BTreeSet<Label>,
    pub steps: Vec<Step>,
    pub ending: Ending,
}

impl Computation {
    /// Every state of the computation, the start included.
    pub fn states(&self) -> impl Iterator<Item = &LabeledTerm> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.state))
    }

    pub fn last(&self) -> &LabeledTerm {
        self.steps.last().map_or(&self.start, |s| &s.state)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.index).collect()
    }

    pub fn is_maximal(&self) -> bool {
        matches!(self.ending, Ending::Maximal)
    }

    pub fn lasso(&self) -> Option<(&LassoCertificate, &FairnessClass)> {
        match &self.ending {
            Ending::Lasso(cert, class) => Some((cert, class)),
            _ => None,
        }
    }

    /// Whether some state of the computation can perform ω.
    pub fn reaches_success(&self) -> bool {
        self.states().any(|s| success_enabled(&unlabel(s)))
    }
}

/// The labeled state of a term: its normal form without inert components.
pub fn labeled_state(e: &LabeledTerm) -> (LabeledTerm, BTreeSet<Label>) {
    normalize_inert(e)
}

/// Perform the `index`-th τ-step of `state`, returning the transition and
/// the labeled state it reaches together with the labels removed as inert.
pub fn advance(
    state: &LabeledTerm,
    index: usize,
) -> Option<(LabeledTransition, LabeledTerm, BTreeSet<Label>)> {
    let transition = tau_steps(state).into_iter().nth(index)?;
    let (next, dead) = normalize_inert(&transition.target);
    Some((transition, next, dead))
}

/// A selector receives the current state and its τ-steps (never empty) and
/// returns the index to fire, or `None` to stop.
pub type Selector = Box<dyn FnMut(&LabeledTerm, &[LabeledTransition]) -> Option<usize> + Send>;

/// Scheduling policies.
pub enum Policy {
    /// Serve the oldest live label first; see [`FairQueue`].
    StrongFairQueue,
    /// Cycle through transition indices.
    WeakFairRoundRobin,
    /// Fire the given indices in order, then stop.
    Script(Vec<usize>),
    Custom(Selector),
}

impl Policy {
    /// The fair queue, except that transitions firing any label in `avoid`
    /// are taken only when nothing else is enabled.
    pub fn avoiding(avoid: BTreeSet<Label>) -> Policy {
        let mut queue = FairQueue::avoiding(avoid);
        Policy::Custom(Box::new(move |state, steps| {
            Some(queue.choose(state, steps))
        }))
    }

    fn target(&self) -> Option<Mode> {
        match self {
            Policy::StrongFairQueue => Some(Mode::Strong),
            Policy::WeakFairRoundRobin => Some(Mode::Weak),
            Policy::Script(_) | Policy::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::StrongFairQueue => f.write_str("StrongFairQueue"),
            Policy::WeakFairRoundRobin => f.write_str("WeakFairRoundRobin"),
            Policy::Script(s) => write!(f, "Script({s:?})"),
            Policy::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A FIFO queue of live labels.
///
/// Newly live labels join at the back. Each step fires a transition whose
/// fired set contains the oldest queued label that is still live; labels
/// passed over because they are no longer live move to the back, and labels
/// that left the term are dropped.
#[derive(Clone, Debug, Default)]
pub struct FairQueue {
    queue: VecDeque<Label>,
    avoid: BTreeSet<Label>,
}

impl FairQueue {
    pub fn new() -> Self {
        FairQueue::default()
    }

    pub fn avoiding(avoid: BTreeSet<Label>) -> Self {
        FairQueue {
            queue: VecDeque::new(),
            avoid,
        }
    }

    /// Pick a transition among the non-empty list `steps` of `state`.
    pub fn choose(&mut self, state: &LabeledTerm, steps: &[LabeledTransition]) -> usize {
        let present = all_labels(state);
        let live: BTreeSet<Label> = steps.iter().flat_map(|t| t.fired.iter().cloned()).collect();
        self.queue.retain(|v| present.contains(v));
        for v in &live {
            if !self.avoid.contains(v) && !self.queue.contains(v) {
                self.queue.push_back(v.clone());
            }
        }
        let allowed = |t: &LabeledTransition| t.fired.is_disjoint(&self.avoid);
        let mut passed = Vec::new();
        let mut choice = None;
        while let Some(v) = self.queue.pop_front() {
            if live.contains(&v) {
                if let Some(i) = steps
                    .iter()
                    .position(|t| t.fired.contains(&v) && allowed(t))
                {
                    choice = Some(i);
                    break;
                }
            }
            passed.push(v);
        }
        self.queue.extend(passed);
        choice
            .or_else(|| steps.iter().position(allowed))
            .unwrap_or(0)
    }
}

/// Number of earlier recurrences of a state that are tried as lasso
/// candidates after each step.
const RECURRENCE_TRIES: usize = 4;

/// Run `policy` from `start` for at most `max_steps` τ-steps, stopping
/// early at a state that can perform ω.
///
/// After every step the run looks for an earlier state with the same
/// erasure; the segment in between is offered to the validator as a loop.
/// For the fair policies a lasso is accepted once it validates in the
/// matching mode; for scripted and custom policies any lasso that is not
/// rejected is reported with its class.
pub fn run_scheduler(start: &LabeledTerm, mut policy: Policy, max_steps: usize) -> Computation {
    let (state, start_dead) = labeled_state(start);
    let mut comp = Computation {
        start: state,
        start_dead,
        steps: Vec::new(),
        ending: Ending::Truncated,
    };
    let mut seen: HashMap<String, Vec<usize>> = HashMap::new();
    seen.entry(erased_key(&comp.start)).or_default().push(0);
    let mut queue = FairQueue::new();
    let mut rotation = 0usize;
    let target = policy.target();
    let start_text = comp.start.to_string();
    loop {
        let current = comp.last().clone();
        if success_enabled(&unlabel(&current)) {
            comp.ending = Ending::Success;
            return comp;
        }
        let steps = tau_steps(&current);
        if steps.is_empty() {
            comp.ending = Ending::Maximal;
            return comp;
        }
        if comp.steps.len() >= max_steps {
            comp.ending = Ending::Truncated;
            return comp;
        }
        let chosen = match &mut policy {
            Policy::StrongFairQueue => Some(queue.choose(&current, &steps)),
            Policy::WeakFairRoundRobin => {
                rotation += 1;
                Some((rotation - 1) % steps.len())
            }
            Policy::Script(script) => script.get(comp.steps.len()).copied(),
            Policy::Custom(select) => select(&current, &steps),
        };
        let Some(index) = chosen.filter(|i| *i < steps.len()) else {
            comp.ending = Ending::Stopped;
            return comp;
        };
        let transition = &steps[index];
        let (next, dead) = normalize_inert(&transition.target);
        comp.steps.push(Step {
            index,
            fired: transition.fired.clone(),
            state: next,
            dead,
        });
        let position = comp.steps.len();
        let key = erased_key(comp.last());
        let earlier = seen.entry(key).or_default();
        let indices = comp.indices();
        for &j in earlier.iter().rev().take(RECURRENCE_TRIES) {
            let cert = LassoCertificate::new(&start_text, &indices[..j], &indices[j..]);
            let validation = validate_certificate(&cert, target.unwrap_or(Mode::Weak));
            let keep = match target {
                Some(_) => validation.accepted,
                None => !matches!(validation.class, FairnessClass::Rejected(_)),
            };
            if keep {
                let cert = validation.completed(cert);
                comp.ending = Ending::Lasso(Box::new(cert), validation.class);
                return comp;
            }
        }
        earlier.push(position);
    }
}
