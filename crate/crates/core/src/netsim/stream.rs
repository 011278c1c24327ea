//! Reliable in-order carrier: per-segment sequence numbers, cumulative
//! acknowledgements echoing the sender's timestamp, fast retransmit after
//! three duplicate acks, and a retransmission timer with exponential backoff.

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

pub const INITIAL_RTO: Duration = Duration::from_millis(200);
pub const MIN_RTO: Duration = Duration::from_millis(200);
pub const MAX_RTO: Duration = Duration::from_secs(60);
pub const DUPACK_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamParams {
    /// Maximum unacknowledged segments.
    #[serde(default = "default_window")]
    pub window_segments: usize,
    /// Size of a bare acknowledgement on the wire.
    #[serde(default = "default_ack")]
    pub ack_bytes: usize,
}

fn default_window() -> usize {
    1024
}

fn default_ack() -> usize {
    52
}

impl Default for StreamParams {
    fn default() -> Self {
        Self {
            window_segments: default_window(),
            ack_bytes: default_ack(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<T> {
    pub seq: u64,
    pub unit: T,
    pub sent_at: Timestamp,
    pub retransmit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    /// Next sequence number expected.
    pub cumulative: u64,
    pub echo: Timestamp,
}

#[derive(Debug, Clone)]
struct InFlight<T> {
    unit: T,
}

#[derive(Debug, Clone)]
pub struct StreamSender<T> {
    window: usize,
    next_seq: u64,
    acked: u64,
    waiting: VecDeque<T>,
    in_flight: BTreeMap<u64, InFlight<T>>,
    srtt: Option<f64>,
    rttvar: f64,
    rto: Duration,
    deadline: Option<Timestamp>,
    dupacks: u32,
    retransmissions: u64,
}

impl<T: Clone> StreamSender<T> {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            next_seq: 0,
            acked: 0,
            waiting: VecDeque::new(),
            in_flight: BTreeMap::new(),
            srtt: None,
            rttvar: 0.0,
            rto: INITIAL_RTO,
            deadline: None,
            dupacks: 0,
            retransmissions: 0,
        }
    }

    pub fn deadline(&self) -> Option<Timestamp> {
        self.deadline
    }

    pub fn rto(&self) -> Duration {
        self.rto
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn queued(&self) -> usize {
        self.waiting.len()
    }

    pub fn retransmissions(&self) -> u64 {
        self.retransmissions
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight.is_empty() && self.waiting.is_empty()
    }

    pub fn push(&mut self, unit: T, now: Timestamp) -> Vec<Segment<T>> {
        self.waiting.push_back(unit);
        self.fill(now)
    }

    fn fill(&mut self, now: Timestamp) -> Vec<Segment<T>> {
        let mut out = Vec::new();
        while self.in_flight.len() < self.window {
            let Some(unit) = self.waiting.pop_front() else {
                break;
            };
            let seq = self.next_seq;
            self.next_seq += 1;
            self.in_flight.insert(seq, InFlight { unit: unit.clone() });
            out.push(Segment {
                seq,
                unit,
                sent_at: now,
                retransmit: false,
            });
        }
        if !out.is_empty() && self.deadline.is_none() {
            self.deadline = Some(now + self.rto);
        }
        out
    }

    fn resend_oldest(&mut self, now: Timestamp) -> Option<Segment<T>> {
        let (&seq, f) = self.in_flight.iter().next()?;
        self.retransmissions += 1;
        Some(Segment {
            seq,
            unit: f.unit.clone(),
            sent_at: now,
            retransmit: true,
        })
    }

    fn sample(&mut self, rtt: Duration) {
        let r = rtt.as_nanos() as f64;
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2.0;
            }
            Some(s) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (s - r).abs();
                self.srtt = Some(0.875 * s + 0.125 * r);
            }
        }
        let rto = Duration::from_nanos((self.srtt.unwrap_or(r) + 4.0 * self.rttvar) as u64);
        self.rto = rto.clamp(MIN_RTO, MAX_RTO);
    }

    pub fn on_ack(&mut self, ack: Ack, now: Timestamp) -> Vec<Segment<T>> {
        if ack.cumulative > self.acked {
            let keep = self.in_flight.split_off(&ack.cumulative);
            self.in_flight = keep;
            self.acked = ack.cumulative;
            self.dupacks = 0;
            self.sample(now.since(ack.echo));
            self.deadline = if self.in_flight.is_empty() {
                None
            } else {
                Some(now + self.rto)
            };
            return self.fill(now);
        }
        if ack.cumulative == self.acked && !self.in_flight.is_empty() {
            self.dupacks += 1;
            if self.dupacks == DUPACK_THRESHOLD {
                return self.resend_oldest(now).into_iter().collect();
            }
        }
        Vec::new()
    }

    pub fn on_timeout(&mut self, now: Timestamp) -> Vec<Segment<T>> {
        match self.deadline {
            Some(d) if now >= d => {}
            _ => return Vec::new(),
        }
        self.rto = (self.rto * 2).min(MAX_RTO);
        self.dupacks = 0;
        let out: Vec<_> = self.resend_oldest(now).into_iter().collect();
        self.deadline = if self.in_flight.is_empty() {
            None
        } else {
            Some(now + self.rto)
        };
        out
    }
}

#[derive(Debug, Clone)]
pub struct StreamReceiver<T> {
    expected: u64,
    buffer: BTreeMap<u64, T>,
    duplicates: u64,
}

impl<T> Default for StreamReceiver<T> {
    fn default() -> Self {
        Self {
            expected: 0,
            buffer: BTreeMap::new(),
            duplicates: 0,
        }
    }
}

impl<T> StreamReceiver<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Returns the units now deliverable in order, and the ack to send back.
    pub fn on_segment(&mut self, seq: u64, unit: T, sent_at: Timestamp) -> (Vec<T>, Ack) {
        let mut out = Vec::new();
        if seq < self.expected || self.buffer.contains_key(&seq) {
            self.duplicates += 1;
        } else {
            self.buffer.insert(seq, unit);
            while let Some(u) = self.buffer.remove(&self.expected) {
                out.push(u);
                self.expected += 1;
            }
        }
        (
            out,
            Ack {
                cumulative: self.expected,
                echo: sent_at,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_limits_in_flight() {
        let mut s = StreamSender::new(2);
        assert_eq!(s.push('a', Timestamp::ZERO).len(), 1);
        assert_eq!(s.push('b', Timestamp::ZERO).len(), 1);
        assert!(s.push('c', Timestamp::ZERO).is_empty());
        assert_eq!(s.queued(), 1);
        let out = s.on_ack(
            Ack {
                cumulative: 1,
                echo: Timestamp::ZERO,
            },
            Timestamp::from_millis(100),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].unit, 'c');
        assert_eq!(out[0].seq, 2);
    }

    #[test]
    fn timeout_backs_off() {
        let mut s = StreamSender::new(8);
        s.push(1u8, Timestamp::ZERO);
        assert_eq!(s.deadline(), Some(Timestamp::from_millis(200)));
        assert!(s.on_timeout(Timestamp::from_millis(199)).is_empty());
        let r = s.on_timeout(Timestamp::from_millis(200));
        assert_eq!(r.len(), 1);
        assert!(r[0].retransmit);
        assert_eq!(s.deadline(), Some(Timestamp::from_millis(600)));
        s.on_timeout(Timestamp::from_millis(600));
        assert_eq!(s.deadline(), Some(Timestamp::from_millis(1400)));
        assert_eq!(s.retransmissions(), 2);
    }

    #[test]
    fn rto_adapts_to_measured_rtt() {
        let mut s = StreamSender::new(8);
        s.push(1u8, Timestamp::ZERO);
        s.on_ack(
            Ack {
                cumulative: 1,
                echo: Timestamp::ZERO,
            },
            Timestamp::from_millis(300),
        );
        // srtt 300, rttvar 150
        assert_eq!(s.rto(), Duration::from_millis(900));
        assert_eq!(s.deadline(), None);
    }

    #[test]
    fn fast_retransmit_on_three_dupacks() {
        let mut s = StreamSender::new(8);
        for i in 0..5u8 {
            s.push(i, Timestamp::ZERO);
        }
        let t = Timestamp::from_millis(50);
        let dup = Ack {
            cumulative: 0,
            echo: Timestamp::ZERO,
        };
        assert!(s.on_ack(dup, t).is_empty());
        assert!(s.on_ack(dup, t).is_empty());
        let r = s.on_ack(dup, t);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].seq, 0);
    }

    #[test]
    fn receiver_orders_and_dedups() {
        let mut r = StreamReceiver::new();
        let t = Timestamp::ZERO;
        assert_eq!(
            r.on_segment(1, 'b', t),
            (
                vec![],
                Ack {
                    cumulative: 0,
                    echo: t
                }
            )
        );
        assert_eq!(r.on_segment(1, 'b', t).0, Vec::<char>::new());
        assert_eq!(
            r.on_segment(0, 'a', t),
            (
                vec!['a', 'b'],
                Ack {
                    cumulative: 2,
                    echo: t
                }
            )
        );
        assert_eq!(r.on_segment(0, 'a', t).1.cumulative, 2);
        assert_eq!(r.duplicates(), 2);
    }
}
