//! A workbench for the labeled choiceless π-calculus.
//!
//! * [`syntax`]: processes, parsing, printing, substitution, canonical forms.
//! * [`lts`]: early operational semantics and canonical τ-graphs.
//! * [`labeling`]: labels, the labeling function, labeled semantics, live labels.
//! * [`fairness`]: computations, fair schedulers, lasso certificates and their validator.
//! * [`quotient`]: component-count abstraction used to prove fair-must verdicts.
//! * [`verdicts`]: must, fair, weak-fair must and strong-fair must, plus bounded bisimilarity.
//! * [`corpus`]: the bundled regression corpus of experiments.
//! * [`random`]: seeded generation of random processes and observers.

pub mod corpus;
pub mod fairness;
pub mod labeling;
pub mod lts;
pub mod quotient;
pub mod random;
pub mod syntax;
pub mod verdicts;

pub use labeling::{Label, LabeledTerm};
pub use lts::{Action, Caps};
pub use syntax::{Name, Process};
