use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

pub const COLUMNS: [&str; 10] = [
    "protocol",
    "trial",
    "avg_dl_kbps",
    "peak_dl_kbps",
    "avg_ul_kbps",
    "peak_ul_kbps",
    "avg_latency_ms",
    "min_latency_ms",
    "jitter_ms",
    "connection_time_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    AvgDownload,
    PeakDownload,
    AvgUpload,
    PeakUpload,
    AvgLatency,
    MinLatency,
    Jitter,
    ConnectionTime,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::AvgDownload,
        Metric::PeakDownload,
        Metric::AvgUpload,
        Metric::PeakUpload,
        Metric::AvgLatency,
        Metric::MinLatency,
        Metric::Jitter,
        Metric::ConnectionTime,
    ];

    pub fn column(self) -> &'static str {
        COLUMNS[2 + self as usize]
    }

    pub fn lower_is_better(self) -> bool {
        matches!(
            self,
            Metric::AvgLatency | Metric::MinLatency | Metric::Jitter | Metric::ConnectionTime
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub protocol: String,
    pub trial: u32,
    pub avg_dl_kbps: f64,
    pub peak_dl_kbps: f64,
    pub avg_ul_kbps: f64,
    pub peak_ul_kbps: f64,
    pub avg_latency_ms: f64,
    pub min_latency_ms: f64,
    pub jitter_ms: f64,
    pub connection_time_ms: f64,
}

impl TrialRecord {
    pub fn metric(&self, m: Metric) -> f64 {
        self.metrics()[m as usize]
    }

    pub fn metrics(&self) -> [f64; 8] {
        [
            self.avg_dl_kbps,
            self.peak_dl_kbps,
            self.avg_ul_kbps,
            self.peak_ul_kbps,
            self.avg_latency_ms,
            self.min_latency_ms,
            self.jitter_ms,
            self.connection_time_ms,
        ]
    }

    pub fn from_metrics(protocol: &str, trial: u32, m: [f64; 8]) -> Self {
        Self {
            protocol: protocol.to_string(),
            trial,
            avg_dl_kbps: m[0],
            peak_dl_kbps: m[1],
            avg_ul_kbps: m[2],
            peak_ul_kbps: m[3],
            avg_latency_ms: m[4],
            min_latency_ms: m[5],
            jitter_ms: m[6],
            connection_time_ms: m[7],
        }
    }

    /// Checks the record invariants; names the first offending column.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        for m in Metric::ALL {
            let v = self.metric(m);
            if !(v.is_finite() && v >= 0.0) {
                return Err((m.column(), format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.peak_dl_kbps < self.avg_dl_kbps {
            return Err(("peak_dl_kbps", "below avg_dl_kbps".into()));
        }
        if self.peak_ul_kbps < self.avg_ul_kbps {
            return Err(("peak_ul_kbps", "below avg_ul_kbps".into()));
        }
        if self.min_latency_ms > self.avg_latency_ms {
            return Err(("min_latency_ms", "above avg_latency_ms".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema mismatch: input is empty, expected header {}", COLUMNS.join(","))]
    Empty,
    #[error("schema mismatch: header column {index} is {found:?}, expected {expected:?}")]
    Header {
        index: usize,
        found: String,
        expected: &'static str,
    },
    #[error("schema mismatch: header has {0} columns, expected 10")]
    HeaderWidth(usize),
    #[error("schema mismatch: no data rows")]
    NoRows,
    #[error("schema mismatch at row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: &'static str,
        message: String,
    },
    #[error("schema mismatch at row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Parses benchmark-schema CSV. Rows are numbered from 1 after the header.
pub fn ingest_raw_table<R: Read>(input: R) -> Result<Vec<TrialRecord>, SchemaError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(SchemaError::Empty),
        Some(Err(e)) => {
            return Err(SchemaError::Row {
                row: 0,
                message: e.to_string(),
            })
        }
        Some(Ok(h)) => h,
    };
    if header.len() == 1 && header.get(0) == Some("") {
        return Err(SchemaError::Empty);
    }
    if header.len() != COLUMNS.len() {
        return Err(SchemaError::HeaderWidth(header.len()));
    }
    for (index, (found, expected)) in header.iter().zip(COLUMNS).enumerate() {
        if found != expected {
            return Err(SchemaError::Header {
                index,
                found: found.to_string(),
                expected,
            });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rows.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| SchemaError::Row {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != COLUMNS.len() {
            return Err(SchemaError::Row {
                row,
                message: format!("{} fields, expected 10", rec.len()),
            });
        }
        let protocol = rec.get(0).unwrap_or("");
        if protocol.is_empty() {
            return Err(SchemaError::Cell {
                row,
                column: "protocol",
                message: "empty".into(),
            });
        }
        let trial: u32 = rec[1].parse().map_err(|_| SchemaError::Cell {
            row,
            column: "trial",
            message: format!("{:?} is not an integer", &rec[1]),
        })?;
        let mut m = [0.0; 8];
        for (k, slot) in m.iter_mut().enumerate() {
            let column = COLUMNS[2 + k];
            *slot = rec[2 + k].parse().map_err(|_| SchemaError::Cell {
                row,
                column,
                message: format!("{:?} is not a number", &rec[2 + k]),
            })?;
        }
        let r = TrialRecord::from_metrics(protocol, trial, m);
        r.check().map_err(|(column, message)| SchemaError::Cell {
            row,
            column,
            message,
        })?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(SchemaError::NoRows);
    }
    Ok(out)
}

pub fn write_records<W: Write>(records: &[TrialRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        let mut row = vec![r.protocol.clone(), r.trial.to_string()];
        row.extend(r.metrics().iter().map(|v| format!("{v:.3}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
