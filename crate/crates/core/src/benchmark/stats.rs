use std::fmt;
use std::io::Write;

use thiserror::Error;

use super::record::{Metric, TrialRecord, COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("jitter needs at least 2 samples, got {0}")]
pub struct InsufficientSamples(pub usize);

/// Mean absolute difference between consecutive round-trip samples.
pub fn compute_jitter(rtt_ms: &[f64]) -> Result<f64, InsufficientSamples> {
    if rtt_ms.len() < 2 {
        return Err(InsufficientSamples(rtt_ms.len()));
    }
    let total: f64 = rtt_ms.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(total / (rtt_ms.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub protocol: String,
    pub trials: usize,
    pub means: [f64; 8],
}

impl Summary {
    pub fn mean(&self, m: Metric) -> f64 {
        self.means[m as usize]
    }

    /// Means rounded to one decimal, as reported.
    pub fn rounded(&self, m: Metric) -> f64 {
        (self.mean(m) * 10.0).round() / 10.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot aggregate an empty list of trials")]
pub struct EmptyInput;

/// Per-protocol arithmetic means, in order of first appearance.
pub fn aggregate(trials: &[TrialRecord]) -> Result<Vec<Summary>, EmptyInput> {
    if trials.is_empty() {
        return Err(EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    for t in trials {
        if !order.contains(&t.protocol.as_str()) {
            order.push(&t.protocol);
        }
    }
    Ok(order
        .into_iter()
        .map(|p| {
            let rows: Vec<&TrialRecord> = trials.iter().filter(|t| t.protocol == p).collect();
            let mut means = [0.0; 8];
            for (k, m) in means.iter_mut().enumerate() {
                // sort before summing so the result does not depend on row order
                let mut col: Vec<f64> = rows.iter().map(|r| r.metrics()[k]).collect();
                col.sort_by(f64::total_cmp);
                *m = col.iter().sum::<f64>() / col.len() as f64;
            }
            Summary {
                protocol: p.to_string(),
                trials: rows.len(),
                means,
            }
        })
        .collect())
}

pub fn write_summaries_csv<W: Write>(summaries: &[Summary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = COLUMNS.iter().copied().filter(|c| *c != "trial").collect();
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![s.protocol.clone()];
        row.extend(Metric::ALL.iter().map(|m| format!("{:.1}", s.mean(*m))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summaries_table(summaries: &[Summary]) -> String {
    let mut rows = vec![std::iter::once("protocol".to_string())
        .chain(Metric::ALL.iter().map(|m| m.column().to_string()))
        .collect()];
    for s in summaries {
        let row: Vec<String> = std::iter::once(s.protocol.clone())
            .chain(Metric::ALL.iter().map(|m| format!("{:.1}", s.mean(*m))))
            .collect();
        rows.push(row);
    }
    render(&rows)
}

fn render(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{v:<w$}", w = widths[c])
                } else {
                    format!("{v:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub metric: Metric,
    pub lower_is_better: bool,
    /// Best first; ties keep input order.
    pub order: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rankings: Vec<Ranking>,
}

impl Comparison {
    pub fn best(&self, m: Metric) -> Option<&str> {
        self.rankings
            .iter()
            .find(|r| r.metric == m)
            .and_then(|r| r.order.first())
            .map(|(p, _)| p.as_str())
    }

    pub fn ranking(&self, m: Metric) -> Option<&Ranking> {
        self.rankings.iter().find(|r| r.metric == m)
    }
}

pub fn compare(summaries: &[Summary]) -> Comparison {
    let rankings = Metric::ALL
        .iter()
        .map(|&metric| {
            let lower = metric.lower_is_better();
            let mut order: Vec<(String, f64)> = summaries
                .iter()
                .map(|s| (s.protocol.clone(), s.mean(metric)))
                .collect();
            order.sort_by(|a, b| {
                if lower {
                    a.1.total_cmp(&b.1)
                } else {
                    b.1.total_cmp(&a.1)
                }
            });
            Ranking {
                metric,
                lower_is_better: lower,
                order,
            }
        })
        .collect();
    Comparison { rankings }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows = vec![vec![
            "metric".to_string(),
            "better".to_string(),
            "ranking, best first".to_string(),
        ]];
        for r in &self.rankings {
            let order: Vec<String> = r
                .order
                .iter()
                .map(|(p, v)| format!("{p} ({v:.1})"))
                .collect();
            rows.push(vec![
                r.metric.column().to_string(),
                if r.lower_is_better { "lower" } else { "higher" }.to_string(),
                order.join(", "),
            ]);
        }
        // left-align everything; rankings are prose
        let w0 = rows.iter().map(|r| r[0].len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r[1].len()).max().unwrap_or(0);
        for r in rows {
            writeln!(f, "{:<w0$}  {:<w1$}  {}", r[0], r[1], r[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_examples() {
        assert_eq!(compute_jitter(&[100.0, 100.0, 100.0]), Ok(0.0));
        assert_eq!(compute_jitter(&[100.0, 110.0, 100.0]), Ok(10.0));
        assert_eq!(compute_jitter(&[5.0]), Err(InsufficientSamples(1)));
        assert_eq!(compute_jitter(&[]), Err(InsufficientSamples(0)));
    }

    fn rec(p: &str, dl: f64, jitter: f64) -> TrialRecord {
        TrialRecord::from_metrics(p, 1, [dl, dl, 1.0, 1.0, 10.0, 10.0, jitter, 100.0])
    }

    #[test]
    fn aggregate_groups_in_first_seen_order() {
        let t = [rec("b", 10.0, 1.0), rec("a", 4.0, 2.0), rec("b", 20.0, 3.0)];
        let s = aggregate(&t).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].protocol, "b");
        assert_eq!(s[0].trials, 2);
        assert_eq!(s[0].mean(Metric::AvgDownload), 15.0);
        assert_eq!(s[1].mean(Metric::Jitter), 2.0);
        assert_eq!(aggregate(&[]), Err(EmptyInput));
    }

    #[test]
    fn compare_respects_direction() {
        let s = aggregate(&[rec("slow", 10.0, 1.0), rec("fast", 20.0, 5.0)]).unwrap();
        let c = compare(&s);
        assert_eq!(c.best(Metric::AvgDownload), Some("fast"));
        assert_eq!(c.best(Metric::Jitter), Some("slow"));
        let text = c.to_string();
        assert!(text.contains("jitter_ms"));
        assert!(text.contains("slow (1.0), fast (5.0)"));
    }

    #[test]
    fn summary_csv_shape() {
        let s = aggregate(&[rec("x", 10.04, 1.0)]).unwrap();
        let mut buf = Vec::new();
        write_summaries_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 9);
        assert!(lines.next().unwrap().starts_with("x,10.0,10.0,1.0"));
    }
}
