//! Command-line front end: structure checking, token-game simulation,
//! projection, explanation enumeration, diagnosis under both semantics,
//! differential comparison, bounded precision analysis, and run
//! enumeration, over `.net.json` net-system files.
//!
//! Exit codes: 0 clean analysis, 1 analysis-level findings (imprecision
//! witnesses, structural violations, failed simulation steps, exhausted
//! search budgets), 2 usage or input errors.

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pndiag_core::diagnose::{
    compare, diagnose_efficient, diagnose_exact, precision_check, DiagnosisTrace, PrecisionReport,
    Verdict,
};
use pndiag_core::explain::{
    enumerate_runs, explain_multiset, explain_ordered, Explanation, SearchBudget,
};
use pndiag_core::net::{NetSystem, TransitionId};
use pndiag_core::observation::Observation;
use pndiag_core::parse_net;

#[derive(Parser)]
#[command(
    name = "pndiag",
    version,
    about = "Petri-net fault diagnosis: exact and order-dropping diagnosers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Human,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagMode {
    Exact,
    Efficient,
}

#[derive(Args)]
struct NetArg {
    /// Path to a .net.json net-system file
    #[arg(long, value_name = "FILE")]
    net: String,
    /// Output format
    #[arg(long, value_enum, default_value = "human")]
    format: OutputFormat,
}

#[derive(Args)]
struct BudgetArgs {
    /// Cap on consecutive unobservable firings during search
    /// (default: 10 x number of places)
    #[arg(long, value_name = "N")]
    max_unobs_segment: Option<usize>,
    /// Cap on the number of explanations per search (default: 100000)
    #[arg(long, value_name = "N")]
    max_explanations: Option<usize>,
}

impl BudgetArgs {
    fn resolve(&self, net: &NetSystem) -> Result<SearchBudget, Failure> {
        let default = SearchBudget::default_for(net);
        SearchBudget::new(
            self.max_unobs_segment
                .unwrap_or(default.max_unobs_segment()),
            self.max_explanations.unwrap_or(default.max_explanations()),
        )
        .map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate the structural assumptions diagnosis relies on
    Check {
        #[command(flatten)]
        net: NetArg,
    },
    /// Fire a transition sequence from the initial marking
    Simulate {
        #[command(flatten)]
        net: NetArg,
        /// Comma-separated transition names, e.g. f,A,B,D or A,E*3
        #[arg(long, value_name = "SEQ")]
        seq: String,
    },
    /// Project a transition sequence onto the observable transitions
    Project {
        #[command(flatten)]
        net: NetArg,
        #[arg(long, value_name = "SEQ")]
        seq: String,
    },
    /// Enumerate the explanations of an observation
    Explain {
        #[command(flatten)]
        net: NetArg,
        /// Comma-separated observable transition names (may be empty)
        #[arg(long, value_name = "OBS", default_value = "")]
        obs: String,
        /// Ordered semantics: explanations reproduce the observation exactly
        #[arg(long, conflicts_with = "multiset")]
        ordered: bool,
        /// Multiset semantics: only event counts must match
        #[arg(long)]
        multiset: bool,
        /// Also list explanations for every prefix of the observation
        #[arg(long)]
        prefixes: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Per-prefix diagnosis verdicts for an observation
    Diagnose {
        #[command(flatten)]
        net: NetArg,
        #[arg(long, value_name = "OBS", default_value = "")]
        obs: String,
        /// exact: ordered per-prefix verdicts; efficient: order-dropping
        /// with latched fault detection
        #[arg(long, value_enum)]
        mode: DiagMode,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Run both diagnosers on one observation and show the divergence
    Compare {
        #[command(flatten)]
        net: NetArg,
        #[arg(long, value_name = "OBS", default_value = "")]
        obs: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Search all observations up to a length bound for verdicts where the
    /// exact diagnoser is certain but the efficient one is not
    Precision {
        #[command(flatten)]
        net: NetArg,
        /// Maximum observation length to explore
        #[arg(long, value_name = "N")]
        bound: usize,
        /// Worker threads for the per-observation evaluation
        #[arg(long, value_name = "N", default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Enumerate every fireable sequence up to a length bound
    Runs {
        #[command(flatten)]
        net: NetArg,
        #[arg(long, value_name = "N")]
        max_len: usize,
    },
}

/// An error that already knows its exit code. Usage/input problems exit 2,
/// analysis-level findings exit 1.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: 2,
        }
    }

    fn analysis(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check { net } => {
            let system = load_net(&net.net)?;
            cmd_check(&system, net.format)
        }
        Command::Simulate { net, seq } => {
            let system = load_net(&net.net)?;
            let sequence = parse_sequence(&system, &seq)?;
            cmd_simulate(&system, &sequence, net.format)
        }
        Command::Project { net, seq } => {
            let system = load_net(&net.net)?;
            let sequence = parse_sequence(&system, &seq)?;
            cmd_project(&system, &sequence, net.format)
        }
        Command::Explain {
            net,
            obs,
            ordered: _,
            multiset,
            prefixes,
            budget,
        } => {
            let system = load_net(&net.net)?;
            let observation = parse_observation(&system, &obs)?;
            let budget = budget.resolve(&system)?;
            cmd_explain(
                &system,
                &observation,
                multiset,
                prefixes,
                &budget,
                net.format,
            )
        }
        Command::Diagnose {
            net,
            obs,
            mode,
            budget,
        } => {
            let system = load_net(&net.net)?;
            let observation = parse_observation(&system, &obs)?;
            let budget = budget.resolve(&system)?;
            cmd_diagnose(&system, &observation, mode, &budget, net.format)
        }
        Command::Compare { net, obs, budget } => {
            let system = load_net(&net.net)?;
            let observation = parse_observation(&system, &obs)?;
            let budget = budget.resolve(&system)?;
            cmd_compare(&system, &observation, &budget, net.format)
        }
        Command::Precision {
            net,
            bound,
            jobs,
            budget,
        } => {
            let system = load_net(&net.net)?;
            if jobs == 0 {
                return Err(Failure::usage("--jobs must be positive"));
            }
            let budget = budget.resolve(&system)?;
            cmd_precision(&system, bound, jobs, &budget, net.format)
        }
        Command::Runs { net, max_len } => {
            let system = load_net(&net.net)?;
            cmd_runs(&system, max_len, net.format)
        }
    }
}

fn load_net(path: &str) -> Result<NetSystem, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
    parse_net(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))
}

/// Parses `f,A,B,D` with the repetition shorthand `E*5`. An empty string is
/// the empty sequence.
fn parse_sequence(net: &NetSystem, text: &str) -> Result<Vec<TransitionId>, Failure> {
    let mut out = Vec::new();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(out);
    }
    for token in trimmed.split(',') {
        let token = token.trim();
        let (name, count) = match token.split_once('*') {
            Some((name, reps)) => {
                let count: usize = reps
                    .trim()
                    .parse()
                    .map_err(|_| Failure::usage(format!("bad repetition count in {token:?}")))?;
                (name.trim(), count)
            }
            None => (token, 1),
        };
        let id = net
            .transition_id(name)
            .ok_or_else(|| Failure::usage(format!("unknown transition {name:?}")))?;
        out.extend(std::iter::repeat_n(id, count));
    }
    Ok(out)
}

fn parse_observation(net: &NetSystem, text: &str) -> Result<Observation, Failure> {
    let events = parse_sequence(net, text)?;
    Observation::new(net, events).map_err(|e| Failure::usage(e.to_string()))
}

fn names(net: &NetSystem, seq: &[TransitionId]) -> Vec<String> {
    seq.iter()
        .map(|&t| net.transition_name(t).to_owned())
        .collect()
}

fn emit<T: Serialize>(format: OutputFormat, report: &T, human: impl FnOnce()) {
    match format {
        OutputFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(report).expect("reports always serialize")
            );
        }
        OutputFormat::Human => human(),
    }
}

// ---------------------------------------------------------------------------
// check

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    acyclic_unobservable: bool,
    cycle_witness: Option<Vec<String>>,
    fault_count: usize,
    findings: Vec<String>,
}

fn cmd_check(net: &NetSystem, format: OutputFormat) -> Result<u8, Failure> {
    let report = net.check_structure();
    let out = CheckReport {
        command: "check",
        acyclic_unobservable: report.acyclic_unobservable,
        cycle_witness: report.cycle_witness.clone(),
        fault_count: report.fault_count,
        findings: report.findings.clone(),
    };
    emit(format, &out, || {
        if report.acyclic_unobservable {
            println!("unobservable subnet: acyclic");
        } else {
            println!(
                "unobservable subnet: CYCLIC ({})",
                report.cycle_witness.as_ref().unwrap().join(" -> ")
            );
        }
        println!("fault transitions: {}", report.fault_count);
        for finding in &report.findings {
            println!("finding: {finding}");
        }
    });
    Ok(if report.acyclic_unobservable { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateReport {
    command: &'static str,
    sequence: Vec<String>,
    final_marking: BTreeMap<String, u64>,
}

fn cmd_simulate(
    net: &NetSystem,
    seq: &[TransitionId],
    format: OutputFormat,
) -> Result<u8, Failure> {
    let end = net
        .fire_sequence(net.initial(), seq)
        .map_err(|e| Failure::analysis(format!("simulation failed: {e}")))?;
    let final_marking: BTreeMap<String, u64> = end
        .tokens()
        .map(|(p, c)| (net.place_name(p).to_owned(), c))
        .collect();
    let out = SimulateReport {
        command: "simulate",
        sequence: names(net, seq),
        final_marking,
    };
    emit(format, &out, || {
        println!("fired: {}", net.format_sequence(seq));
        println!("final marking: {}", net.format_marking(&end));
    });
    Ok(0)
}

// ---------------------------------------------------------------------------
// project

#[derive(Serialize)]
struct ProjectReport {
    command: &'static str,
    sequence: Vec<String>,
    observation: Vec<String>,
}

fn cmd_project(net: &NetSystem, seq: &[TransitionId], format: OutputFormat) -> Result<u8, Failure> {
    let o = pndiag_core::observation::project(net.labeling(), seq);
    let out = ProjectReport {
        command: "project",
        sequence: names(net, seq),
        observation: names(net, o.events()),
    };
    emit(format, &out, || {
        println!("sequence:    {}", net.format_sequence(seq));
        println!("observation: {}", net.format_sequence(o.events()));
    });
    Ok(0)
}

// ---------------------------------------------------------------------------
// explain

#[derive(Serialize)]
struct ExplanationEntry {
    sequence: Vec<String>,
    contains_fault: bool,
}

#[derive(Serialize)]
struct PrefixExplanations {
    index: usize,
    observation: Vec<String>,
    explanations: Vec<ExplanationEntry>,
}

#[derive(Serialize)]
struct ExplainReport {
    command: &'static str,
    semantics: &'static str,
    observation: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    explanations: Option<Vec<ExplanationEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prefixes: Option<Vec<PrefixExplanations>>,
}

fn explanation_entries(
    net: &NetSystem,
    set: &std::collections::BTreeSet<Explanation>,
) -> Vec<ExplanationEntry> {
    set.iter()
        .map(|e| ExplanationEntry {
            sequence: names(net, &e.sequence),
            contains_fault: e.contains_fault,
        })
        .collect()
}

fn explain_one(
    net: &NetSystem,
    o: &Observation,
    multiset: bool,
    budget: &SearchBudget,
) -> Result<Vec<ExplanationEntry>, Failure> {
    let set = if multiset {
        explain_multiset(net, &o.to_multiset(), budget)
    } else {
        explain_ordered(net, o, budget)
    }
    .map_err(|e| Failure::analysis(e.to_string()))?;
    Ok(explanation_entries(net, &set))
}

fn print_explanations(entries: &[ExplanationEntry], indent: &str) {
    if entries.is_empty() {
        println!("{indent}(none)");
    }
    for e in entries {
        println!(
            "{indent}[{}]{}",
            e.sequence.join(","),
            if e.contains_fault { "  fault" } else { "" }
        );
    }
}

fn cmd_explain(
    net: &NetSystem,
    o: &Observation,
    multiset: bool,
    prefixes: bool,
    budget: &SearchBudget,
    format: OutputFormat,
) -> Result<u8, Failure> {
    let semantics = if multiset { "multiset" } else { "ordered" };
    let out = if prefixes {
        let mut per_prefix = Vec::new();
        for (i, prefix) in o.prefixes().iter().enumerate() {
            per_prefix.push(PrefixExplanations {
                index: i,
                observation: names(net, prefix.events()),
                explanations: explain_one(net, prefix, multiset, budget)?,
            });
        }
        ExplainReport {
            command: "explain",
            semantics,
            observation: names(net, o.events()),
            explanations: None,
            prefixes: Some(per_prefix),
        }
    } else {
        ExplainReport {
            command: "explain",
            semantics,
            observation: names(net, o.events()),
            explanations: Some(explain_one(net, o, multiset, budget)?),
            prefixes: None,
        }
    };
    emit(format, &out, || {
        println!(
            "observation {} ({} semantics)",
            net.format_sequence(o.events()),
            semantics
        );
        if let Some(prefixes) = &out.prefixes {
            for p in prefixes {
                println!("o_{} = [{}]:", p.index, p.observation.join(","));
                print_explanations(&p.explanations, "  ");
            }
        }
        if let Some(entries) = &out.explanations {
            println!("explanations ({}):", entries.len());
            print_explanations(entries, "  ");
        }
    });
    Ok(0)
}

// ---------------------------------------------------------------------------
// diagnose / compare

#[derive(Serialize)]
struct PrefixRow {
    index: usize,
    observation: Vec<String>,
    explanations: usize,
    faulty: usize,
    verdict: &'static str,
}

#[derive(Serialize)]
struct TraceReport {
    mode: &'static str,
    per_prefix: Vec<PrefixRow>,
    #[serde(rename = "final")]
    final_verdict: &'static str,
    first_certain_prefix: Option<usize>,
    anomalous: bool,
}

fn trace_report(net: &NetSystem, o: &Observation, trace: &DiagnosisTrace) -> TraceReport {
    let prefixes = o.prefixes();
    TraceReport {
        mode: trace.mode.as_str(),
        per_prefix: trace
            .per_prefix
            .iter()
            .map(|p| PrefixRow {
                index: p.index,
                observation: names(net, prefixes[p.index].events()),
                explanations: p.explanation_count,
                faulty: p.faulty_count,
                verdict: p.verdict.as_str(),
            })
            .collect(),
        final_verdict: trace.final_verdict.as_str(),
        first_certain_prefix: trace.first_certain_prefix(),
        anomalous: trace.anomalous,
    }
}

fn print_trace(report: &TraceReport) {
    println!("mode: {}", report.mode);
    println!(
        "{:<7} {:<24} {:>12} {:>7}  verdict",
        "prefix", "observation", "explanations", "faulty"
    );
    for row in &report.per_prefix {
        println!(
            "{:<7} {:<24} {:>12} {:>7}  {}",
            row.index,
            format!("[{}]", row.observation.join(",")),
            row.explanations,
            row.faulty,
            row.verdict
        );
    }
    match report.first_certain_prefix {
        Some(i) => println!(
            "final: {} (first certain at prefix {i})",
            report.final_verdict
        ),
        None => println!("final: {}", report.final_verdict),
    }
    if report.anomalous {
        println!("warning: certainty was lost at a later prefix; the observation cannot come from a run of this net");
    }
}

#[derive(Serialize)]
struct DiagnoseReport {
    command: &'static str,
    observation: Vec<String>,
    #[serde(flatten)]
    trace: TraceReport,
}

fn cmd_diagnose(
    net: &NetSystem,
    o: &Observation,
    mode: DiagMode,
    budget: &SearchBudget,
    format: OutputFormat,
) -> Result<u8, Failure> {
    let trace = match mode {
        DiagMode::Exact => diagnose_exact(net, o, budget),
        DiagMode::Efficient => diagnose_efficient(net, o, budget),
    }
    .map_err(|e| Failure::analysis(e.to_string()))?;
    let out = DiagnoseReport {
        command: "diagnose",
        observation: names(net, o.events()),
        trace: trace_report(net, o, &trace),
    };
    emit(format, &out, || print_trace(&out.trace));
    Ok(0)
}

#[derive(Serialize)]
struct CompareReport {
    command: &'static str,
    observation: Vec<String>,
    exact: TraceReport,
    efficient: TraceReport,
    diverged: bool,
}

fn cmd_compare(
    net: &NetSystem,
    o: &Observation,
    budget: &SearchBudget,
    format: OutputFormat,
) -> Result<u8, Failure> {
    let (exact, efficient) =
        compare(net, o, budget).map_err(|e| Failure::analysis(e.to_string()))?;
    let diverged = exact
        .per_prefix
        .iter()
        .zip(&efficient.per_prefix)
        .any(|(a, b)| a.verdict == Verdict::FaultCertain && b.verdict != Verdict::FaultCertain);
    let out = CompareReport {
        command: "compare",
        observation: names(net, o.events()),
        exact: trace_report(net, o, &exact),
        efficient: trace_report(net, o, &efficient),
        diverged,
    };
    emit(format, &out, || {
        println!("=== exact ===");
        print_trace(&out.exact);
        println!("=== efficient ===");
        print_trace(&out.efficient);
        if diverged {
            println!("divergence: the exact diagnoser reaches FAULT_CERTAIN where the efficient one does not");
        } else {
            println!("no divergence on this observation");
        }
    });
    Ok(0)
}

// ---------------------------------------------------------------------------
// precision

#[derive(Serialize)]
struct WitnessRow {
    run: Vec<String>,
    observation: Vec<String>,
    exact: &'static str,
    efficient: &'static str,
}

#[derive(Serialize)]
struct PrecisionCliReport {
    command: &'static str,
    bound: usize,
    diagnosable_within_bound: bool,
    detection_delay: Option<usize>,
    imprecise_witnesses: Vec<WitnessRow>,
}

fn cmd_precision(
    net: &NetSystem,
    bound: usize,
    jobs: usize,
    budget: &SearchBudget,
    format: OutputFormat,
) -> Result<u8, Failure> {
    let report: PrecisionReport =
        precision_check(net, bound, budget, jobs).map_err(|e| Failure::analysis(e.to_string()))?;
    let out = PrecisionCliReport {
        command: "precision",
        bound: report.bound,
        diagnosable_within_bound: report.diagnosable_within_bound,
        detection_delay: report.detection_delay,
        imprecise_witnesses: report
            .imprecise_witnesses
            .iter()
            .map(|w| WitnessRow {
                run: names(net, &w.run),
                observation: names(net, &w.observation),
                exact: w.exact.as_str(),
                efficient: w.efficient.as_str(),
            })
            .collect(),
    };
    emit(format, &out, || {
        println!("bound: {bound}");
        match (report.diagnosable_within_bound, report.detection_delay) {
            (true, Some(delay)) => println!(
                "diagnosable within bound: yes (max detection delay {delay} observable events)"
            ),
            (true, None) => {
                println!("diagnosable within bound: yes (vacuously; no faulty run exists)")
            }
            (false, _) => println!("diagnosable within bound: NO"),
        }
        println!("imprecision witnesses ({}):", out.imprecise_witnesses.len());
        for w in &out.imprecise_witnesses {
            println!(
                "  obs [{}]  run [{}]  exact {}  efficient {}",
                w.observation.join(","),
                w.run.join(","),
                w.exact,
                w.efficient
            );
        }
    });
    Ok(if out.imprecise_witnesses.is_empty() {
        0
    } else {
        1
    })
}

// ---------------------------------------------------------------------------
// runs

#[derive(Serialize)]
struct RunsReport {
    command: &'static str,
    max_len: usize,
    count: usize,
    runs: Vec<Vec<String>>,
}

fn cmd_runs(net: &NetSystem, max_len: usize, format: OutputFormat) -> Result<u8, Failure> {
    let runs = enumerate_runs(net, max_len);
    let out = RunsReport {
        command: "runs",
        max_len,
        count: runs.len(),
        runs: runs.iter().map(|r| names(net, r)).collect(),
    };
    emit(format, &out, || {
        println!("runs up to length {max_len} ({}):", out.count);
        for r in &runs {
            println!("  {}", net.format_sequence(r));
        }
    });
    Ok(0)
}
