//! Command-line front end. Exit codes: 0 success, 2 configuration or schema
//! error, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::baseline::{resolve_presets, TunnelModelParams};
use crate::benchmark::{
    aggregate, compare, ingest_raw_table, run_benchmark, run_trial, summaries_table, write_records,
    write_summaries_csv,
};
use crate::crypto::vectors::known_answers;
use crate::netsim::scenario::load_scenario;
use crate::netsim::{run, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "text-table", alias = "table")]
    TextTable,
}

#[derive(Debug, Parser)]
#[command(
    name = "wglite",
    version,
    about = "wg-lite tunnel, network simulator and VPN benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Benchmark presets over a scenario, or aggregate recorded trials.
    #[command(subcommand)]
    Bench(Bench),
    /// Network simulator utilities.
    #[command(subcommand)]
    Sim(Sim),
    /// Print the crypto known-answer vectors.
    Vectors {
        #[arg(long, value_enum, default_value = "text-table")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
enum Bench {
    /// Run trials of each preset and write trials, summary and traces to --out.
    Run(RunArgs),
    /// Per-protocol means of a trials CSV.
    Aggregate {
        /// CSV in the benchmark schema.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text-table")]
        format: Format,
        /// Also write the summary CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file, or the name of a shipped scenario.
    #[arg(long, default_value = "default")]
    scenario: String,
    /// Comma-separated preset names, or `all`.
    #[arg(long, default_value = "all")]
    presets: String,
    /// Required unless the scenario sets one.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario's workload.trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "text-table")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Sim {
    /// Run the scenario's flows (or one trial of --presets) and export the event trace.
    Trace {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace the first trial of this preset instead of the scenario's flows.
        #[arg(long)]
        presets: Option<String>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn seed_for(cli: Option<u64>, scenario: &Scenario) -> Result<u64, CliError> {
    cli.or(scenario.seed)
        .ok_or_else(|| config("a seed is required: pass --seed or set `seed` in the scenario"))
}

/// Presets with any overrides from the scenario applied.
pub fn presets_for(spec: &str, scenario: &Scenario) -> Result<Vec<TunnelModelParams>, CliError> {
    let presets = resolve_presets(spec).map_err(config)?;
    for name in scenario.presets.keys() {
        crate::baseline::preset(name).map_err(config)?;
    }
    presets
        .into_iter()
        .map(|p| match scenario.presets.get(&p.name) {
            Some(t) => p.with_overrides(t).map_err(config),
            None => Ok(p),
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn bench_run(a: RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scenario = load_scenario(&a.scenario).map_err(config)?;
    let seed = seed_for(a.seed, &scenario)?;
    let presets = presets_for(&a.presets, &scenario)?;
    let mut workload = scenario.workload.clone();
    if let Some(t) = a.trials {
        workload.trials = t;
    }
    workload.validate().map_err(config)?;

    let output = run_benchmark(&presets, &scenario, &workload, seed);

    let traces_dir = a.out.join("traces");
    fs::create_dir_all(&traces_dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", traces_dir.display())))?;
    let mut csv = Vec::new();
    write_records(&output.records, &mut csv).map_err(runtime)?;
    write_file(&a.out.join("trials.csv"), &csv)?;
    for t in &output.traces {
        let path = traces_dir.join(format!("{}_trial{}.tsv", t.protocol, t.trial));
        write_file(&path, t.trace.to_tsv().as_bytes())?;
    }
    let failures: String = output.failures.iter().map(|f| format!("{f}\n")).collect();
    let failures_path = a.out.join("failures.txt");
    if failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(runtime)?;
        }
    } else {
        write_file(&failures_path, failures.as_bytes())?;
    }

    if let Ok(summaries) = aggregate(&output.records) {
        let mut summary_csv = Vec::new();
        write_summaries_csv(&summaries, &mut summary_csv).map_err(runtime)?;
        write_file(&a.out.join("summary.csv"), &summary_csv)?;
        let cmp = compare(&summaries);
        let report = match a.format {
            Format::Csv => String::from_utf8(summary_csv).expect("csv is utf-8"),
            Format::TextTable => format!("{}\n{}", summaries_table(&summaries), cmp),
        };
        write!(stdout, "{report}").map_err(runtime)?;
        write_file(
            &a.out.join("report.txt"),
            format!("{}\n{}", summaries_table(&summaries), cmp).as_bytes(),
        )?;
    }
    if !output.failures.is_empty() {
        return Err(runtime(format!(
            "{} trial(s) failed:\n{}",
            output.failures.len(),
            failures.trim_end()
        )));
    }
    Ok(())
}

fn bench_aggregate(
    input: &Path,
    format: Format,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let file = fs::File::open(input)
        .map_err(|e| config(format!("cannot open {}: {e}", input.display())))?;
    let records = ingest_raw_table(file).map_err(config)?;
    let summaries = aggregate(&records).map_err(config)?;
    let mut csv = Vec::new();
    write_summaries_csv(&summaries, &mut csv).map_err(runtime)?;
    if let Some(path) = out {
        write_file(&path, &csv)?;
    }
    match format {
        Format::Csv => stdout.write_all(&csv).map_err(runtime)?,
        Format::TextTable => write!(stdout, "{}", summaries_table(&summaries)).map_err(runtime)?,
    }
    Ok(())
}

fn sim_trace(
    scenario: &str,
    seed: Option<u64>,
    presets: Option<String>,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario).map_err(config)?;
    let seed = seed_for(seed, &scenario)?;
    let trace = match presets {
        Some(spec) => {
            let p = presets_for(&spec, &scenario)?.remove(0);
            run_trial(&p, &scenario, &scenario.workload, seed, 1)
                .map_err(runtime)?
                .trace
        }
        None => {
            if scenario.flows.is_empty() {
                return Err(config(
                    "scenario has no [[flow]] entries; add some or pass --presets",
                ));
            }
            run(&scenario, seed).map_err(config)?.trace
        }
    };
    match out {
        Some(path) => write_file(&path, trace.to_tsv().as_bytes()),
        None => match trace.write_tsv(stdout) {
            // the reader went away (e.g. piped into `head`)
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(runtime),
        },
    }
}

fn vectors(format: Format, stdout: &mut dyn Write) -> Result<(), CliError> {
    let results = known_answers();
    let mut text = String::new();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["primitive", "name", "inputs", "output", "expected", "ok"])
                .map_err(runtime)?;
            for r in &results {
                let inputs: Vec<String> =
                    r.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let ok = if r.passed() { "true" } else { "false" };
                w.write_record([
                    r.primitive,
                    r.name,
                    &inputs.join(";"),
                    &r.computed,
                    r.expected,
                    ok,
                ])
                .map_err(runtime)?;
            }
            text = String::from_utf8(w.into_inner().map_err(runtime)?).expect("utf-8");
        }
        Format::TextTable => {
            for r in &results {
                text.push_str(&format!("[{}] {}\n", r.primitive, r.name));
                for (k, v) in &r.inputs {
                    text.push_str(&format!("  {k:<9}= {v}\n"));
                }
                text.push_str(&format!("  {:<9}= {}\n", "output", r.computed));
                text.push_str(&format!("  {:<9}= {}\n", "expected", r.expected));
                text.push_str(&format!(
                    "  {}\n",
                    if r.passed() { "ok" } else { "MISMATCH" }
                ));
            }
        }
    }
    stdout.write_all(text.as_bytes()).map_err(runtime)?;
    let failed = results.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(runtime(format!("{failed} vector(s) mismatched")));
    }
    Ok(())
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Bench(Bench::Run(a)) => bench_run(a, stdout),
        Command::Bench(Bench::Aggregate { input, format, out }) => {
            bench_aggregate(&input, format, out, stdout)
        }
        Command::Sim(Sim::Trace {
            scenario,
            seed,
            presets,
            out,
        }) => sim_trace(&scenario, seed, presets, out, stdout),
        Command::Vectors { format } => vectors(format, stdout),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
