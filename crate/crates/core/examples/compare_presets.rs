//! Simulated benchmark of the three presets on the default scenario:
//! a 110 ms path with a 25/2.5 Mbit/s line, tunnelled through
//! OpenVPN-over-TCP and stunnel as a censored network would require.

use wglite::baseline::resolve_presets;
use wglite::benchmark::{aggregate, compare, run_benchmark, summaries_table};
use wglite::netsim::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(7);
    let scenario = Scenario::builtin("default").unwrap();
    let presets = resolve_presets("all")?;
    let out = run_benchmark(&presets, &scenario, &scenario.workload, seed);
    for f in &out.failures {
        eprintln!("failed: {f}");
    }
    for r in &out.records {
        println!(
            "{:<17} trial {}  setup {:>8.1} ms  down {:>8.1} kbps  up {:>7.1} kbps  jitter {:>5.1} ms",
            r.protocol, r.trial, r.connection_time_ms, r.avg_dl_kbps, r.avg_ul_kbps, r.jitter_ms
        );
    }
    let summaries = aggregate(&out.records)?;
    println!("\n{}", summaries_table(&summaries));
    println!("{}", compare(&summaries));
    Ok(())
}
