use std::time::Duration;

use crate::time::Timestamp;

pub const WINDOW: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub avg_kbps: f64,
    pub peak_kbps: f64,
    pub samples: usize,
}

/// Samples delivered bytes over fixed windows anchored at the first delivery.
/// Only complete windows count; a transfer shorter than one window yields a
/// single sample of all its bytes over one window.
pub fn throughput(deliveries: &[(Timestamp, usize)], window: Duration) -> Option<Throughput> {
    let mut d = deliveries.to_vec();
    d.sort_by_key(|x| x.0);
    let (t0, t_last) = (d.first()?.0, d.last()?.0);
    let w = window.as_nanos() as u64;
    let full = (t_last.0 - t0.0) / w;
    let to_kbps = |bytes: u64| bytes as f64 * 8.0 / window.as_secs_f64() / 1000.0;
    if full == 0 {
        let k = to_kbps(d.iter().map(|x| x.1 as u64).sum());
        return Some(Throughput {
            avg_kbps: k,
            peak_kbps: k,
            samples: 1,
        });
    }
    let mut buckets = vec![0u64; full as usize];
    for (t, b) in d {
        let i = ((t.0 - t0.0) / w) as usize;
        if i < buckets.len() {
            buckets[i] += b as u64;
        }
    }
    let samples: Vec<f64> = buckets.into_iter().map(to_kbps).collect();
    let avg = samples.iter().sum::<f64>() / samples.len() as f64;
    let peak = samples.iter().copied().fold(f64::MIN, f64::max);
    Some(Throughput {
        avg_kbps: avg,
        peak_kbps: peak,
        samples: samples.len(),
    })
}
