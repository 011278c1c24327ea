use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Timestamp;

pub const MIN_MTU: usize = 576;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("packet of {len} bytes exceeds link mtu {mtu}")]
pub struct OversizePacket {
    pub len: usize,
    pub mtu: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub latency_ms: f64,
    /// Half-width of the uniform jitter distribution.
    #[serde(default)]
    pub jitter_ms: f64,
    #[serde(default)]
    pub loss_rate: f64,
    pub bandwidth_kbps: f64,
    #[serde(default = "default_mtu")]
    pub mtu: usize,
}

fn default_mtu() -> usize {
    1500
}

impl LinkModel {
    pub fn new(latency_ms: f64, bandwidth_kbps: f64) -> Self {
        Self {
            latency_ms,
            jitter_ms: 0.0,
            loss_rate: 0.0,
            bandwidth_kbps,
            mtu: 1500,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.latency_ms >= 0.0 && self.latency_ms.is_finite()) {
            return Err(format!("latency_ms must be >= 0, got {}", self.latency_ms));
        }
        if !(self.jitter_ms >= 0.0 && self.jitter_ms.is_finite()) {
            return Err(format!("jitter_ms must be >= 0, got {}", self.jitter_ms));
        }
        if !(0.0..=1.0).contains(&self.loss_rate) {
            return Err(format!(
                "loss_rate must lie in [0, 1], got {}",
                self.loss_rate
            ));
        }
        if !(self.bandwidth_kbps > 0.0 && self.bandwidth_kbps.is_finite()) {
            return Err(format!(
                "bandwidth_kbps must be > 0, got {}",
                self.bandwidth_kbps
            ));
        }
        if self.mtu < MIN_MTU {
            return Err(format!("mtu must be >= {MIN_MTU}, got {}", self.mtu));
        }
        Ok(())
    }

    /// Time to clock `len` bytes onto the wire.
    pub fn serialization_delay(&self, len: usize) -> Duration {
        transmit_time(len, self.bandwidth_kbps)
    }
}

pub(crate) fn transmit_time(len: usize, kbps: f64) -> Duration {
    Duration::from_nanos((len as f64 * 8.0 * 1e6 / kbps).round() as u64)
}

/// One direction of a link: a FIFO serializer followed by propagation delay,
/// jitter and independent loss.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
    busy_until: Timestamp,
    sent_bytes: u64,
    delivered_bytes: u64,
}

impl Link {
    pub fn new(model: LinkModel, seed: u64) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            busy_until: Timestamp::ZERO,
            sent_bytes: 0,
            delivered_bytes: 0,
        }
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn sent_bytes(&self) -> u64 {
        self.sent_bytes
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.delivered_bytes
    }

    /// Queues a packet at `now`. Returns its arrival time, or `None` if the
    /// loss draw dropped it. Calls must be made in non-decreasing `now`.
    pub fn schedule_send(
        &mut self,
        len: usize,
        now: Timestamp,
    ) -> Result<Option<Timestamp>, OversizePacket> {
        if len > self.model.mtu {
            return Err(OversizePacket {
                len,
                mtu: self.model.mtu,
            });
        }
        // draws happen unconditionally so the random stream does not depend on outcomes
        let lost = self.rng.random::<f64>() < self.model.loss_rate;
        let jitter_ns = if self.model.jitter_ms > 0.0 {
            self.rng
                .random_range(-self.model.jitter_ms..=self.model.jitter_ms)
                * 1e6
        } else {
            0.0
        };

        let start = now.max(self.busy_until);
        let tx_end = start + self.model.serialization_delay(len);
        self.busy_until = tx_end;
        self.sent_bytes += len as u64;
        if lost {
            return Ok(None);
        }
        let flight = (self.model.latency_ms * 1e6 + jitter_ns).max(0.0).round() as u64;
        self.delivered_bytes += len as u64;
        Ok(Some(Timestamp(tx_end.0 + flight)))
    }
}

/// Token bucket shaper. Packets never drop; they depart once enough tokens
/// have accumulated, in FIFO order.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    rate_kbps: f64,
    capacity_bytes: f64,
    tokens: f64,
    last: Timestamp,
}

impl TokenBucket {
    pub fn new(rate_kbps: f64, capacity_bytes: usize) -> Self {
        Self {
            rate_kbps,
            capacity_bytes: capacity_bytes as f64,
            tokens: capacity_bytes as f64,
            last: Timestamp::ZERO,
        }
    }

    pub fn rate_kbps(&self) -> f64 {
        self.rate_kbps
    }

    /// Departure time of a `len`-byte packet arriving at `now`.
    pub fn admit(&mut self, len: usize, now: Timestamp) -> Timestamp {
        let t0 = now.max(self.last);
        let bytes_per_ns = self.rate_kbps * 1000.0 / 8.0 / 1e9;
        self.tokens =
            (self.tokens + (t0.0 - self.last.0) as f64 * bytes_per_ns).min(self.capacity_bytes);
        let need = len as f64;
        let depart = if self.tokens >= need {
            self.tokens -= need;
            t0
        } else {
            let wait = ((need - self.tokens) / bytes_per_ns).ceil() as u64;
            self.tokens = 0.0;
            Timestamp(t0.0 + wait)
        };
        self.last = depart;
        depart
    }
}
