use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::time::Timestamp;

struct Scheduled<E> {
    at: Timestamp,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // min-heap on (time, insertion sequence)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Event queue ordered by `(time, insertion sequence)`. Time never goes backwards.
pub struct SimClock<E> {
    now: Timestamp,
    seq: u64,
    queue: BinaryHeap<Scheduled<E>>,
}

impl<E> Default for SimClock<E> {
    fn default() -> Self {
        Self {
            now: Timestamp::ZERO,
            seq: 0,
            queue: BinaryHeap::new(),
        }
    }
}

impl<E> SimClock<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Events scheduled in the past fire at the current time.
    pub fn schedule(&mut self, at: Timestamp, event: impl Into<E>) {
        let at = at.max(self.now);
        self.queue.push(Scheduled {
            at,
            seq: self.seq,
            event: event.into(),
        });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(Timestamp, E)> {
        let s = self.queue.pop()?;
        self.now = s.at;
        Some((s.at, s.event))
    }

    pub fn peek_time(&self) -> Option<Timestamp> {
        self.queue.peek().map(|s| s.at)
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }
}
