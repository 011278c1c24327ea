//! Aggregates the shipped per-trial measurements of the three VPNs and
//! ranks them per metric.

use std::fs::File;

use wglite::benchmark::{aggregate, compare, ingest_raw_table, summaries_table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference_trials.csv");
    let records = ingest_raw_table(File::open(path)?)?;
    let summaries = aggregate(&records)?;
    println!("{} trials from {path}\n", records.len());
    println!("{}", summaries_table(&summaries));
    println!("{}", compare(&summaries));
    Ok(())
}
