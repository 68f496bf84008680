//! The bundled regression corpus: term files plus a JSON manifest with the
//! expected verdict of every property.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use serde::Deserialize;
use thiserror::Error;

use crate::lts::Caps;
use crate::syntax::{parse_observer, parse_process, ParseError, Process};
use crate::verdicts::{check, Property, Verdict, VerdictKind};

const MANIFEST: &str = include_str!("../corpus/manifest.json");

const FILES: &[(&str, &str)] = &[
    (
        "choice-observer.pi",
        include_str!("../corpus/choice-observer.pi"),
    ),
    (
        "choice-replicated-inside.pi",
        include_str!("../corpus/choice-replicated-inside.pi"),
    ),
    (
        "choice-replicated-outside.pi",
        include_str!("../corpus/choice-replicated-outside.pi"),
    ),
    (
        "fair-not-must.pi",
        include_str!("../corpus/fair-not-must.pi"),
    ),
    ("handshake.pi", include_str!("../corpus/handshake.pi")),
    (
        "impossibility-E.pi",
        include_str!("../corpus/impossibility-E.pi"),
    ),
    (
        "impossibility-F.pi",
        include_str!("../corpus/impossibility-F.pi"),
    ),
    (
        "restricted-deadlock.pi",
        include_str!("../corpus/restricted-deadlock.pi"),
    ),
    (
        "scope-extrusion.pi",
        include_str!("../corpus/scope-extrusion.pi"),
    ),
    (
        "strongfair-gap.pi",
        include_str!("../corpus/strongfair-gap.pi"),
    ),
    ("weakfair-gap.pi", include_str!("../corpus/weakfair-gap.pi")),
];

/// Fewest entries an intact corpus has.
pub const MIN_ENTRIES: usize = 8;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus manifest is malformed: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("corpus manifest has schema {0}, expected 1")]
    Schema(u32),
    #[error("corpus entry '{entry}' refers to missing file '{file}'")]
    MissingFile { entry: String, file: String },
    #[error("corpus entry '{entry}': {source}")]
    Parse { entry: String, source: ParseError },
    #[error("corpus entry '{0}' appears twice")]
    Duplicate(String),
    #[error("corpus entry '{entry}' has no expected verdict for {property}")]
    MissingExpectation { entry: String, property: Property },
    #[error("corpus has {0} entries, fewer than {MIN_ENTRIES}")]
    TooFew(usize),
}

#[derive(Deserialize)]
struct Manifest {
    schema: u32,
    entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct ManifestEntry {
    name: String,
    process: String,
    observer: String,
    expected: BTreeMap<Property, VerdictKind>,
    note: String,
}

/// One experiment with its expected verdicts.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub process_text: String,
    pub observer_text: String,
    pub process: Process,
    pub observer: Process,
    pub expected: BTreeMap<Property, VerdictKind>,
    pub note: String,
}

/// Load and check the bundled corpus, ordered by name.
pub fn load_corpus() -> Result<Vec<CorpusEntry>, CorpusError> {
    let manifest: Manifest = serde_json::from_str(MANIFEST)?;
    if manifest.schema != 1 {
        return Err(CorpusError::Schema(manifest.schema));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in manifest.entries {
        if !seen.insert(m.name.clone()) {
            return Err(CorpusError::Duplicate(m.name));
        }
        let text = FILES
            .iter()
            .find(|(file, _)| *file == m.process)
            .map(|(_, text)| *text)
            .ok_or_else(|| CorpusError::MissingFile {
                entry: m.name.clone(),
                file: m.process.clone(),
            })?;
        let parse_error = |source| CorpusError::Parse {
            entry: m.name.clone(),
            source,
        };
        let process = parse_process(text).map_err(parse_error)?;
        let observer = parse_observer(&m.observer).map_err(parse_error)?;
        if let Some(&property) = Property::ALL.iter().find(|p| !m.expected.contains_key(p)) {
            return Err(CorpusError::MissingExpectation {
                entry: m.name,
                property,
            });
        }
        out.push(CorpusEntry {
            process_text: text
                .lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
                .trim()
                .to_string(),
            observer_text: m.observer,
            name: m.name,
            process,
            observer,
            expected: m.expected,
            note: m.note,
        });
    }
    if out.len() < MIN_ENTRIES {
        return Err(CorpusError::TooFew(out.len()));
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// The verdicts computed for one entry.
#[derive(Clone, Debug)]
pub struct EntryReport {
    pub name: String,
    pub verdicts: Vec<(Verdict, VerdictKind)>,
}

impl EntryReport {
    /// Whether every verdict matches its expectation.
    pub fn passed(&self) -> bool {
        self.verdicts
            .iter()
            .all(|(v, expected)| v.kind() == *expected)
    }
}

/// Check every property of one entry.
pub fn run_entry(entry: &CorpusEntry, caps: &Caps) -> EntryReport {
    let verdicts = entry
        .expected
        .iter()
        .map(|(&property, &expected)| {
            (
                check(property, &entry.process, &entry.observer, caps),
                expected,
            )
        })
        .collect();
    EntryReport {
        name: entry.name.clone(),
        verdicts,
    }
}

/// Check all entries concurrently; reports come back in entry order.
pub fn run_corpus(entries: &[CorpusEntry], caps: &Caps) -> Vec<EntryReport> {
    thread::scope(|s| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| s.spawn(move || run_entry(e, caps)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verdict computation panicked"))
            .collect()
    })
}
