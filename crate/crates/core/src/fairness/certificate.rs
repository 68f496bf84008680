//! Lasso certificates and their validator.
//!
//! A certificate names a start term, a prefix and a loop of τ-step indices
//! and, optionally, the label bijection relating the labeled states at the
//! two ends of the loop. The validator trusts none of it: it replays every
//! step, recomputes the recurrence, and classifies the infinite computation
//! obtained by repeating the loop forever (each repetition relabeled).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::advance;
use crate::labeling::{
    all_labels, live_labels, match_up_to_relabeling, normalize_inert, relabel_matches, tau_steps,
    unlabel, well_formed, Label, LabelMap, LabeledTerm,
};
use crate::lts::success_enabled;
use crate::syntax::parse_labeled;

/// Version of the certificate JSON document.
pub const CERTIFICATE_SCHEMA: u32 = 1;

/// Longest orbit-unrolling period the validator accepts.
const PERIOD_CAP: usize = 64;

/// Number of loop repetitions within which a label that is not a survivor
/// must leave the term.
const CREATED_LABEL_WINDOW: usize = 4;

/// A finite witness for an infinite (or finite maximal) computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoCertificate {
    pub schema: u32,
    /// The labeled start term.
    pub start: String,
    pub prefix: Vec<usize>,
    /// The repeated segment; empty for a finite maximal computation.
    #[serde(rename = "loop")]
    pub cycle: Vec<usize>,
    /// The relabeling from the loop-start state to the loop-end state, as
    /// label pairs. Empty means "let the validator find it".
    #[serde(default)]
    pub survivor_map: Vec<(Label, Label)>,
    /// Labels of inert components removed during replay.
    #[serde(default)]
    pub dead_labels: Vec<Label>,
}

impl LassoCertificate {
    pub fn new(start: &str, prefix: &[usize], cycle: &[usize]) -> Self {
        LassoCertificate {
            schema: CERTIFICATE_SCHEMA,
            start: start.to_string(),
            prefix: prefix.to_vec(),
            cycle: cycle.to_vec(),
            survivor_map: Vec::new(),
            dead_labels: Vec::new(),
        }
    }

    /// Whether this certificate describes a finite maximal computation.
    pub fn is_finite(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialise")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Which fairness notion a certificate is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Strong,
    Weak,
}

/// The fairness class of the computation a certificate describes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FairnessClass {
    StrongFair,
    /// Weak-fair but not strong-fair.
    WeakFairOnly,
    Unfair,
    /// The certificate does not describe a computation the validator can
    /// classify.
    Rejected(String),
}

impl FairnessClass {
    pub fn satisfies(&self, mode: Mode) -> bool {
        match self {
            FairnessClass::StrongFair => true,
            FairnessClass::WeakFairOnly => mode == Mode::Weak,
            FairnessClass::Unfair | FairnessClass::Rejected(_) => false,
        }
    }
}

impl fmt::Display for FairnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessClass::StrongFair => f.write_str("strong-fair"),
            FairnessClass::WeakFairOnly => f.write_str("weak-fair only"),
            FairnessClass::Unfair => f.write_str("unfair"),
            FairnessClass::Rejected(reason) => write!(f, "rejected: {reason}"),
        }
    }
}

/// The outcome of validating a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub class: FairnessClass,
    /// Whether the class satisfies the requested mode.
    pub accepted: bool,
    /// Whether no replayed state can perform ω.
    pub unsuccessful: bool,
    /// Number of loop repetitions after which every survivor is fixed.
    pub period: usize,
    /// Survivor labels grouped into orbits of the loop relabeling.
    pub orbits: Vec<Vec<Label>>,
    /// Survivors that are live somewhere on the loop.
    pub live_survivors: Vec<Label>,
    /// The relabeling found between the loop ends.
    pub survivor_map: Vec<(Label, Label)>,
    pub dead_labels: Vec<Label>,
    /// Number of replayed states.
    pub states: usize,
}

impl Validation {
    fn rejected(reason: String) -> Self {
        Validation {
            class: FairnessClass::Rejected(reason),
            accepted: false,
            unsuccessful: false,
            period: 0,
            orbits: Vec::new(),
            live_survivors: Vec::new(),
            survivor_map: Vec::new(),
            dead_labels: Vec::new(),
            states: 0,
        }
    }

    /// Whether the certificate witnesses an unsuccessful computation of the
    /// requested fairness.
    pub fn is_violation_witness(&self) -> bool {
        self.accepted && self.unsuccessful
    }

    /// Fill the validator's findings into `cert`.
    pub fn completed(&self, mut cert: LassoCertificate) -> LassoCertificate {
        cert.survivor_map = self.survivor_map.clone();
        cert.dead_labels = self.dead_labels.clone();
        cert
    }
}

/// Replay and classify `cert`.
///
/// The classification looks only at labels that survive every repetition
/// of the loop (the *survivors*); every other label leaves the term after
/// finitely many repetitions and hence is eventually never live. A survivor
/// plays, in successive repetitions, the roles of the labels on its orbit
/// under the inverse loop relabeling, so it is live infinitely often iff
/// some orbit member is live somewhere on the loop, and continuously live
/// iff every orbit member is live everywhere on the loop.
pub fn validate_certificate(cert: &LassoCertificate, mode: Mode) -> Validation {
    match classify(cert) {
        Ok(mut v) => {
            v.accepted = v.class.satisfies(mode);
            v
        }
        Err(reason) => Validation::rejected(reason),
    }
}

fn classify(cert: &LassoCertificate) -> Result<Validation, String> {
    if cert.schema != CERTIFICATE_SCHEMA {
        return Err(format!("unsupported certificate schema {}", cert.schema));
    }
    let start = parse_labeled(&cert.start).map_err(|e| format!("start term: {e}"))?;
    if !well_formed(&start) {
        return Err("start term is not well formed".into());
    }
    let (first, mut dead) = normalize_inert(&start);
    let mut states = vec![first];
    for (k, &index) in cert.prefix.iter().chain(&cert.cycle).enumerate() {
        let current = states.last().expect("non-empty");
        let Some((_, next, removed)) = advance(current, index) else {
            return Err(format!(
                "step {k}: index {index} out of range ({} τ-steps)",
                tau_steps(current).len()
            ));
        };
        if removed.iter().any(|v| live_labels(&next).contains(v)) {
            return Err(format!("step {k}: a label removed as inert is still live"));
        }
        dead.extend(removed);
        states.push(next);
    }
    let dead_labels: Vec<Label> = dead.into_iter().collect();
    if !cert.dead_labels.is_empty() && cert.dead_labels != dead_labels {
        return Err("listed dead labels differ from those removed during replay".into());
    }
    let unsuccessful = !states.iter().any(|s| success_enabled(&unlabel(s)));
    let mut out = Validation {
        class: FairnessClass::StrongFair,
        accepted: false,
        unsuccessful,
        period: 1,
        orbits: Vec::new(),
        live_survivors: Vec::new(),
        survivor_map: Vec::new(),
        dead_labels,
        states: states.len(),
    };
    if cert.cycle.is_empty() {
        // Finite computations are fair exactly when they are maximal.
        if !tau_steps(states.last().expect("non-empty")).is_empty() {
            return Err("empty loop but the final state still has τ-steps".into());
        }
        return Ok(out);
    }
    let loop_start = cert.prefix.len();
    let s_a = &states[loop_start];
    let s_b = &states[states.len() - 1];
    let beta = loop_relabeling(cert, s_a, s_b)?;
    out.survivor_map = beta.iter().map(|(k, v)| (k.clone(), v.clone())).collect();

    // π = β⁻¹ restricted to labels present at both ends of the loop.
    let common: BTreeSet<Label> = all_labels(s_a)
        .intersection(&all_labels(s_b))
        .cloned()
        .collect();
    let inverse: BTreeMap<&Label, &Label> = beta.iter().map(|(k, v)| (v, k)).collect();
    let pi = |v: &Label| inverse.get(v).copied().filter(|u| common.contains(*u));
    let mut on_orbit = BTreeSet::new();
    for v in &common {
        if on_orbit.contains(v) {
            continue;
        }
        let mut chain = vec![v.clone()];
        let mut cur = v;
        let closed = loop {
            match pi(cur) {
                Some(next) if next == v => break true,
                Some(next) if chain.contains(next) => break false,
                Some(next) => {
                    chain.push(next.clone());
                    cur = next;
                }
                None => break false,
            }
        };
        if closed {
            on_orbit.extend(chain.iter().cloned());
            out.orbits.push(chain);
        } else if chain.len() > CREATED_LABEL_WINDOW {
            return Err(format!(
                "label {v} persists for {} repetitions without recurring",
                chain.len()
            ));
        }
    }
    out.period = out.orbits.iter().map(Vec::len).fold(1, lcm);
    if out.period > PERIOD_CAP {
        return Err(format!("orbit period {} exceeds {PERIOD_CAP}", out.period));
    }

    let lives: Vec<BTreeSet<Label>> = states[loop_start..states.len() - 1]
        .iter()
        .map(live_labels)
        .collect();
    let mut weak = true;
    for orbit in &out.orbits {
        let live_points: usize = orbit
            .iter()
            .map(|u| lives.iter().filter(|l| l.contains(u)).count())
            .sum();
        if live_points > 0 {
            out.live_survivors.extend(orbit.iter().cloned());
        }
        if live_points == orbit.len() * lives.len() {
            weak = false;
        }
    }
    out.class = if !weak {
        FairnessClass::Unfair
    } else if !out.live_survivors.is_empty() {
        FairnessClass::WeakFairOnly
    } else {
        FairnessClass::StrongFair
    };
    Ok(out)
}

fn loop_relabeling(
    cert: &LassoCertificate,
    s_a: &LabeledTerm,
    s_b: &LabeledTerm,
) -> Result<LabelMap, String> {
    if cert.survivor_map.is_empty() {
        return match_up_to_relabeling(s_a, s_b, &BTreeSet::new())
            .ok_or_else(|| "the loop does not return to its start up to relabeling".into());
    }
    let map: LabelMap = cert.survivor_map.iter().cloned().collect();
    let keys: BTreeSet<Label> = map.keys().cloned().collect();
    let values: BTreeSet<Label> = map.values().cloned().collect();
    if map.len() != cert.survivor_map.len() || values.len() != map.len() {
        return Err("survivor map is not a bijection".into());
    }
    if keys != all_labels(s_a) || values != all_labels(s_b) {
        return Err("survivor map does not cover the loop-end labels".into());
    }
    if !relabel_matches(s_a, s_b, &map) {
        return Err("survivor map does not relate the loop ends".into());
    }
    Ok(map)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
