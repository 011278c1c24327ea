//! Benchmark harness: trials of each preset over a scenario, Table-I-shaped
//! records, per-protocol means and rankings.

use rayon::prelude::*;

use crate::baseline::TunnelModelParams;
use crate::netsim::scenario::WorkloadSpec;
use crate::netsim::{Scenario, Trace};

pub mod endpoint;
pub mod record;
pub mod stats;
pub mod trial;

pub use record::{ingest_raw_table, write_records, Metric, SchemaError, TrialRecord, COLUMNS};
pub use stats::{
    aggregate, compare, compute_jitter, summaries_table, write_summaries_csv, Comparison, Summary,
};
pub use trial::{run_trial, trial_seed, TrialError, TrialOutcome};

#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub protocol: String,
    pub trial: u32,
    pub trace: Trace,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    /// Successful trials, preset-major then by trial index.
    pub records: Vec<TrialRecord>,
    pub traces: Vec<TrialTrace>,
    pub failures: Vec<TrialError>,
}

/// Runs `workload.trials` trials of every preset. Trials run in parallel; the
/// output order and contents do not depend on scheduling.
pub fn run_benchmark(
    presets: &[TunnelModelParams],
    scenario: &Scenario,
    workload: &WorkloadSpec,
    seed: u64,
) -> BenchOutput {
    let jobs: Vec<(&TunnelModelParams, u32)> = presets
        .iter()
        .flat_map(|p| (1..=workload.trials as u32).map(move |t| (p, t)))
        .collect();
    let results: Vec<Result<TrialOutcome, TrialError>> = jobs
        .par_iter()
        .map(|(p, t)| run_trial(p, scenario, workload, seed, *t))
        .collect();
    let mut out = BenchOutput::default();
    for r in results {
        match r {
            Ok(o) => {
                out.traces.push(TrialTrace {
                    protocol: o.record.protocol.clone(),
                    trial: o.record.trial,
                    trace: o.trace,
                });
                out.records.push(o.record);
            }
            Err(e) => out.failures.push(e),
        }
    }
    out
}
