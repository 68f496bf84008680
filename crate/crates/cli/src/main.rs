//! `fairpi`: command-line front end of the workbench.
//!
//! Exit codes: 0 success, 1 property violated (or certificate not
//! accepted, or terms not bisimilar, or corpus mismatch), 2 unknown,
//! 3 usage or parse error, 4 cap exceeded.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpi_core::corpus::{load_corpus, run_corpus};
use fairpi_core::fairness::{
    run_scheduler, validate_certificate, Computation, Ending, LassoCertificate, Mode, Policy,
};
use fairpi_core::labeling::{label_term, live_labels, Label, LabeledTerm};
use fairpi_core::lts::{explore_state_graph, Caps};
use fairpi_core::random::TermGenerator;
use fairpi_core::syntax::{canonicalize, parse_labeled, parse_observer, parse_process, Process};
use fairpi_core::verdicts::{bisimulation, check, revalidate, Property, VerdictKind};
use serde_json::json;

const OK: u8 = 0;
const VIOLATED: u8 = 1;
const UNKNOWN: u8 = 2;
const USAGE: u8 = 3;
const CAP_EXCEEDED: u8 = 4;

/// Workbench for the labeled choiceless π-calculus: fairness and testing verdicts.
#[derive(Parser)]
#[command(name = "fairpi", version)]
struct Cli {
    #[command(flatten)]
    caps: CapArgs,
    /// Output format; the default depends on the command.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Include wall-clock timings (makes output nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CapArgs {
    /// Maximum number of explored states.
    #[arg(long, global = true)]
    cap_nodes: Option<usize>,
    /// States with more parallel threads than this are not expanded.
    #[arg(long, global = true)]
    cap_width: Option<usize>,
    /// Maximum length of scheduler runs and witness prefixes.
    #[arg(long, global = true)]
    cap_steps: Option<usize>,
    /// Maximum number of simple cycles composed into one candidate loop.
    #[arg(long, global = true)]
    cap_cycles: Option<usize>,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            nodes: self.cap_nodes.unwrap_or(d.nodes),
            width: self.cap_width.unwrap_or(d.width),
            steps: self.cap_steps.unwrap_or(d.steps),
            cycles: self.cap_cycles.unwrap_or(d.cycles),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term (or generate one) and print its canonical form.
    Parse {
        /// Term text or path of a file holding it.
        term: Option<String>,
        /// Read a labeled term and print it back.
        #[arg(long)]
        labeled: bool,
        /// Generate a random process instead of reading one.
        #[arg(long, conflicts_with_all = ["term", "labeled"])]
        random: bool,
        /// Generate a random observer instead of a process.
        #[arg(long, requires = "random")]
        observer: bool,
        /// Seed of the random generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Explore the τ-graph of an experiment.
    Lts {
        /// Experiment text or file (may contain success).
        term: String,
    },
    /// Label a term from the root label, or from `--from`.
    Label {
        term: String,
        /// Starting label, written `s,n` (for example `01,2` or `,0`).
        #[arg(long)]
        from: Option<String>,
    },
    /// Print the live labels of a term.
    Live {
        /// Labeled term text or file; an unlabeled term is labeled first.
        term: String,
    },
    /// Run a scheduling policy on an experiment and print the computation.
    Run {
        term: String,
        /// strong, roundrobin or script:<file> with whitespace-separated step indices.
        #[arg(long, default_value = "strong")]
        policy: String,
    },
    /// Decide a testing property of a process against an observer.
    Check {
        /// must, fair, wfmust or sfmust.
        #[arg(long = "prop")]
        property: String,
        /// Process text or file.
        #[arg(long)]
        process: String,
        /// Observer text or file.
        #[arg(long)]
        observer: String,
    },
    /// Validate a lasso certificate file.
    Validate {
        certificate: String,
        /// Fairness notion to accept: strong or weak.
        #[arg(long, default_value = "strong")]
        mode: String,
    },
    /// Bounded strong bisimilarity of two processes.
    Bisim {
        left: String,
        right: String,
        /// Number of steps; ignored when both systems are finite.
        #[arg(short, long, default_value_t = 4)]
        k: usize,
        /// Finiteness probe budget in states.
        #[arg(long, default_value_t = 64)]
        probe: usize,
    },
    /// Work with the bundled regression corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// List the entries with their expected verdicts.
    List,
    /// Check every entry against its expected verdicts.
    Run,
}

/// A failure that ends the command with an exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    match run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("fairpi: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let caps = cli.caps.caps();
    match &cli.command {
        Command::Parse {
            term,
            labeled,
            random,
            observer,
            seed,
        } => parse_cmd(cli, term.as_deref(), *labeled, *random, *observer, *seed),
        Command::Lts { term } => lts_cmd(cli, &caps, term),
        Command::Label { term, from } => label_cmd(cli, term, from.as_deref()),
        Command::Live { term } => live_cmd(cli, term),
        Command::Run { term, policy } => run_cmd(cli, &caps, term, policy),
        Command::Check {
            property,
            process,
            observer,
        } => check_cmd(cli, &caps, property, process, observer),
        Command::Validate { certificate, mode } => validate_cmd(cli, certificate, mode),
        Command::Bisim {
            left,
            right,
            k,
            probe,
        } => bisim_cmd(cli, left, right, *k, *probe),
        Command::Corpus { action } => corpus_cmd(cli, &caps, action),
    }
}

/// The text of `arg`: the contents of the file it names, or `arg` itself.
fn read_term(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {arg}: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

fn experiment(arg: &str) -> Result<Process, Failure> {
    parse_observer(&read_term(arg)?).map_err(|e| usage(format!("{arg}: {e}")))
}

fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn labels_text(labels: &BTreeSet<Label>) -> String {
    let items: Vec<String> = labels.iter().map(|l| format!("<{l}>")).collect();
    format!("{{{}}}", items.join(", "))
}

fn parse_cmd(
    cli: &Cli,
    term: Option<&str>,
    labeled: bool,
    random: bool,
    observer: bool,
    seed: u64,
) -> Outcome {
    if labeled {
        let text = read_term(term.ok_or_else(|| usage("parse needs a term"))?)?;
        let e = parse_labeled(&text).map_err(|e| usage(e.to_string()))?;
        return Ok(match cli.format {
            Some(Format::Json) => (json_text(&json!({"schema": 1, "term": e.to_string()})), OK),
            _ => (format!("{e}\n"), OK),
        });
    }
    let p = if random {
        let mut g = TermGenerator::with_seed(seed);
        if observer {
            g.observer()
        } else {
            g.process()
        }
    } else {
        let text = read_term(term.ok_or_else(|| usage("parse needs a term or --random"))?)?;
        parse_process(&text)
            .or_else(|_| parse_observer(&text))
            .map_err(|e| usage(e.to_string()))?
    };
    let form = canonicalize(&p);
    Ok(match cli.format {
        Some(Format::Json) => {
            let free: Vec<String> = p.free_names().iter().map(|n| n.to_string()).collect();
            let doc = json!({
                "schema": 1,
                "term": p.to_string(),
                "canonical": form.key(),
                "free_names": free,
                "observer": p.mentions_success(),
            });
            (json_text(&doc), OK)
        }
        _ if random => (format!("{p}\n"), OK),
        _ => (format!("{}\n", form.key()), OK),
    })
}

fn lts_cmd(cli: &Cli, caps: &Caps, term: &str) -> Outcome {
    let graph = explore_state_graph(&experiment(term)?, caps);
    let out = match cli.format {
        Some(Format::Json) => json_text(&graph.to_json()),
        Some(Format::Text) => {
            let mut s = String::new();
            for (i, node) in graph.nodes.iter().enumerate() {
                let succ: Vec<String> = graph.tau_edges[i].iter().map(|j| j.to_string()).collect();
                let mark = if graph.success[i] { " (success)" } else { "" };
                let _ = writeln!(s, "{i}: {}{mark} -> [{}]", node.key(), succ.join(", "));
            }
            s
        }
        _ => graph.to_dot(),
    };
    match &graph.truncated {
        None => Ok((out, OK)),
        Some(e) => {
            eprintln!("fairpi: {e}");
            Ok((out, CAP_EXCEEDED))
        }
    }
}

fn label_cmd(cli: &Cli, term: &str, from: Option<&str>) -> Outcome {
    let p = experiment(term)?;
    let seed = match from {
        Some(text) => text.parse::<Label>().map_err(usage)?,
        None => Label::root(),
    };
    let e = label_term(&p, &seed);
    Ok(match cli.format {
        Some(Format::Json) => (json_text(&json!({"schema": 1, "term": e.to_string()})), OK),
        _ => (format!("{e}\n"), OK),
    })
}

fn labeled_input(arg: &str) -> Result<LabeledTerm, Failure> {
    let text = read_term(arg)?;
    match parse_labeled(&text) {
        Ok(e) => Ok(e),
        Err(labeled_error) => match parse_observer(&text) {
            Ok(p) => Ok(label_term(&p, &Label::root())),
            Err(_) => Err(usage(format!("{arg}: {labeled_error}"))),
        },
    }
}

fn live_cmd(cli: &Cli, term: &str) -> Outcome {
    let e = labeled_input(term)?;
    let live = live_labels(&e);
    Ok(match cli.format {
        Some(Format::Json) => {
            let doc = json!({"schema": 1, "term": e.to_string(), "live": live});
            (json_text(&doc), OK)
        }
        _ => (format!("{}\n", labels_text(&live)), OK),
    })
}

fn policy_from(text: &str) -> Result<Policy, Failure> {
    match text {
        "strong" => Ok(Policy::StrongFairQueue),
        "roundrobin" => Ok(Policy::WeakFairRoundRobin),
        _ => {
            let file = text
                .strip_prefix("script:")
                .ok_or_else(|| usage(format!("unknown policy '{text}'")))?;
            let body = std::fs::read_to_string(file)
                .map_err(|e| usage(format!("cannot read script {file}: {e}")))?;
            let script = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| usage(format!("bad step index '{s}' in {file}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Policy::Script(script))
        }
    }
}

fn ending_name(c: &Computation) -> &'static str {
    match c.ending {
        Ending::Maximal => "maximal",
        Ending::Success => "success",
        Ending::Truncated => "truncated",
        Ending::Stopped => "stopped",
        Ending::Lasso(..) => "lasso",
    }
}

fn run_cmd(cli: &Cli, caps: &Caps, term: &str, policy: &str) -> Outcome {
    let start = labeled_input(term)?;
    let comp = run_scheduler(&start, policy_from(policy)?, caps.steps);
    let code = if matches!(comp.ending, Ending::Truncated) {
        CAP_EXCEEDED
    } else {
        OK
    };
    let out = match cli.format {
        Some(Format::Json) => {
            let steps: Vec<_> = comp
                .steps
                .iter()
                .map(|s| json!({"index": s.index, "fired": s.fired, "state": s.state.to_string()}))
                .collect();
            let mut doc = json!({
                "schema": 1,
                "start": comp.start.to_string(),
                "steps": steps,
                "ending": ending_name(&comp),
                "reaches_success": comp.reaches_success(),
            });
            if let Some((cert, class)) = comp.lasso() {
                doc["lasso"] = serde_json::to_value(cert).expect("certificates serialize");
                doc["class"] = serde_json::to_value(class).expect("classes serialize");
            }
            json_text(&doc)
        }
        _ => {
            let mut s = format!("0: {}\n", comp.start);
            for (i, step) in comp.steps.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{}: [{} {}] {}",
                    i + 1,
                    step.index,
                    labels_text(&step.fired),
                    step.state
                );
            }
            let _ = writeln!(s, "ending: {}", ending_name(&comp));
            let _ = writeln!(s, "success reached: {}", comp.reaches_success());
            if let Some((cert, class)) = comp.lasso() {
                let _ = writeln!(
                    s,
                    "lasso: prefix {:?} loop {:?} ({class})",
                    cert.prefix, cert.cycle
                );
            }
            s
        }
    };
    Ok((out, code))
}

fn check_cmd(cli: &Cli, caps: &Caps, property: &str, process: &str, observer: &str) -> Outcome {
    let property: Property = property.parse().map_err(usage)?;
    let p_text = read_term(process)?;
    let p = parse_process(&p_text).map_err(|e| usage(format!("{process}: {e}")))?;
    let o = experiment(observer)?;
    let verdict = check(property, &p, &o, caps);
    if let Some(w) = verdict.witness() {
        if let Err(e) = revalidate(property, w, caps) {
            return Err(Failure {
                code: UNKNOWN,
                message: format!("witness failed revalidation: {e}"),
            });
        }
    }
    let code = match verdict.kind() {
        VerdictKind::Holds => OK,
        VerdictKind::Violated => VIOLATED,
        VerdictKind::Unknown => UNKNOWN,
    };
    let out = match cli.format {
        Some(Format::Text) => format!("{} {}: {}\n", property, verdict.kind(), verdict.evidence),
        _ => json_text(&verdict.to_json(cli.timings)),
    };
    Ok((out, code))
}

fn validate_cmd(cli: &Cli, file: &str, mode: &str) -> Outcome {
    let mode = match mode {
        "strong" => Mode::Strong,
        "weak" => Mode::Weak,
        _ => {
            return Err(usage(format!(
                "unknown mode '{mode}' (expected strong or weak)"
            )))
        }
    };
    let text =
        std::fs::read_to_string(file).map_err(|e| usage(format!("cannot read {file}: {e}")))?;
    let cert = LassoCertificate::from_json(&text).map_err(|e| usage(format!("{file}: {e}")))?;
    let v = validate_certificate(&cert, mode);
    let code = if v.accepted { OK } else { VIOLATED };
    let out = match cli.format {
        Some(Format::Text) => format!(
            "{} ({}, {})\n",
            v.class,
            if v.accepted {
                "accepted"
            } else {
                "not accepted"
            },
            if v.unsuccessful {
                "unsuccessful"
            } else {
                "successful"
            }
        ),
        _ => {
            let mut doc = serde_json::to_value(&v).expect("validations serialize");
            doc["schema"] = json!(1);
            json_text(&doc)
        }
    };
    Ok((out, code))
}

fn bisim_cmd(cli: &Cli, left: &str, right: &str, k: usize, probe: usize) -> Outcome {
    let parse = |arg: &str| -> Result<Process, Failure> {
        parse_process(&read_term(arg)?).map_err(|e| usage(format!("{arg}: {e}")))
    };
    let r = bisimulation(&parse(left)?, &parse(right)?, k, probe);
    let code = if r.bisimilar { OK } else { VIOLATED };
    let out = match cli.format {
        Some(Format::Json) => {
            let mut doc = serde_json::to_value(&r).expect("results serialize");
            doc["schema"] = json!(1);
            json_text(&doc)
        }
        _ => {
            let scope = if r.exact {
                "bisimilar".to_string()
            } else {
                format!("{}-step bisimilar", r.depth)
            };
            format!("{}{scope}\n", if r.bisimilar { "" } else { "not " })
        }
    };
    Ok((out, code))
}

fn corpus_cmd(cli: &Cli, caps: &Caps, action: &CorpusAction) -> Outcome {
    let corpus = load_corpus().map_err(|e| usage(e.to_string()))?;
    let json_out = cli.format == Some(Format::Json);
    match action {
        CorpusAction::List => {
            if json_out {
                let entries: Vec<_> = corpus
                    .iter()
                    .map(|e| {
                        json!({
                            "name": e.name,
                            "process": e.process_text,
                            "observer": e.observer_text,
                            "expected": e.expected,
                            "note": e.note,
                        })
                    })
                    .collect();
                return Ok((json_text(&json!({"schema": 1, "entries": entries})), OK));
            }
            let mut s = String::new();
            for e in &corpus {
                let expected: Vec<String> =
                    e.expected.iter().map(|(p, k)| format!("{p}={k}")).collect();
                let _ = writeln!(
                    s,
                    "{}: {}  vs  {}\n  {}",
                    e.name,
                    e.process_text,
                    e.observer_text,
                    expected.join(" ")
                );
            }
            Ok((s, OK))
        }
        CorpusAction::Run => {
            let reports = run_corpus(&corpus, caps);
            let all_pass = reports.iter().all(|r| r.passed());
            let code = if all_pass { OK } else { VIOLATED };
            if json_out {
                let entries: Vec<_> = reports
                    .iter()
                    .map(|r| {
                        let verdicts: Vec<_> = r
                            .verdicts
                            .iter()
                            .map(|(v, expected)| {
                                json!({"property": v.property, "expected": expected, "verdict": v.to_json(cli.timings)})
                            })
                            .collect();
                        json!({"name": r.name, "passed": r.passed(), "verdicts": verdicts})
                    })
                    .collect();
                return Ok((
                    json_text(&json!({"schema": 1, "passed": all_pass, "entries": entries})),
                    code,
                ));
            }
            let mut s = String::new();
            for r in &reports {
                let cells: Vec<String> = r
                    .verdicts
                    .iter()
                    .map(|(v, expected)| {
                        if v.kind() == *expected {
                            format!("{}={}", v.property, v.kind())
                        } else {
                            format!("{}={} (expected {expected})", v.property, v.kind())
                        }
                    })
                    .collect();
                let _ = writeln!(
                    s,
                    "{} {}: {}",
                    if r.passed() { "pass" } else { "FAIL" },
                    r.name,
                    cells.join(" ")
                );
            }
            let passed = reports.iter().filter(|r| r.passed()).count();
            let _ = writeln!(s, "{passed}/{} entries match", reports.len());
            Ok((s, code))
        }
    }
}
