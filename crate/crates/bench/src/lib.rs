//! Workloads shared by the benchmarks.

use fairpi_core::labeling::{label_term, Label, LabeledTerm};
use fairpi_core::syntax::{parse_observer, parse_process, Process};

/// A process tested by an observer.
pub struct Experiment {
    pub name: &'static str,
    pub process: Process,
    pub observer: Process,
}

impl Experiment {
    /// The process in parallel with the observer.
    pub fn composed(&self) -> Process {
        Process::par(self.process.clone(), self.observer.clone())
    }

    /// The composed experiment, labeled from the root.
    pub fn labeled(&self) -> LabeledTerm {
        label_term(&self.composed(), &Label::root())
    }
}

/// Named experiments used as benchmark inputs, all with the observer `a(x).w`.
pub fn experiments() -> Vec<Experiment> {
    [
        ("fair-not-must", "(nu b)(b<u> | !b(x).b<u>) | a<u>"),
        ("weakfair-gap", "!a(x) | (nu b)(b<u> | !b(x).(a<u> | b<u>))"),
        (
            "strongfair-gap",
            "c<u> | !c(x).(nu b)(b<u> | b(y).c<u> | b(y).a<u>)",
        ),
        (
            "impossibility-E",
            "(nu c)(c<u> | !c(x).(c<u> | a<u>)) | (nu c)(c<u> | !c(x).c<u>)",
        ),
        (
            "impossibility-F",
            "!(nu b)(b<u> | b(x) | b(x).a<u>) | (nu c)(c<u> | !c(x).c<u>)",
        ),
    ]
    .into_iter()
    .map(|(name, text)| Experiment {
        name,
        process: parse_process(text).expect("benchmark process parses"),
        observer: parse_observer("a(x).w").expect("benchmark observer parses"),
    })
    .collect()
}
