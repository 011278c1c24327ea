use std::collections::HashMap;
use std::time::Duration;

use thiserror::Error;

use crate::time::Timestamp;

/// flow id (4) + index (2) + total (2)
pub const FRAG_HEADER_LEN: usize = 8;
pub const REASSEMBLY_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub flow_id: u32,
    pub index: u16,
    pub total: u16,
    pub payload: Vec<u8>,
}

impl Fragment {
    pub fn wire_len(&self) -> usize {
        FRAG_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.flow_id.to_le_bytes());
        out.extend_from_slice(&self.index.to_le_bytes());
        out.extend_from_slice(&self.total.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        if bytes.len() < FRAG_HEADER_LEN {
            return None;
        }
        let flow_id = u32::from_le_bytes(bytes[0..4].try_into().ok()?);
        let index = u16::from_le_bytes([bytes[4], bytes[5]]);
        let total = u16::from_le_bytes([bytes[6], bytes[7]]);
        if total == 0 || index >= total {
            return None;
        }
        Some(Self {
            flow_id,
            index,
            total,
            payload: bytes[FRAG_HEADER_LEN..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("overhead {overhead} leaves no room in mtu {mtu}")]
    NoCapacity { mtu: usize, overhead: usize },
    #[error("payload needs {0} fragments")]
    TooManyFragments(usize),
}

/// Splits `payload` into `ceil(len / (mtu - overhead))` fragments (at least one).
/// `overhead` is everything a fragment carries besides its payload slice,
/// including the fragment header.
pub fn fragment(
    payload: &[u8],
    mtu: usize,
    overhead: usize,
    flow_id: u32,
) -> Result<Vec<Fragment>, FragmentError> {
    if overhead >= mtu {
        return Err(FragmentError::NoCapacity { mtu, overhead });
    }
    let cap = mtu - overhead;
    let count = payload.len().div_ceil(cap).max(1);
    let total = u16::try_from(count).map_err(|_| FragmentError::TooManyFragments(count))?;
    if payload.is_empty() {
        return Ok(vec![Fragment {
            flow_id,
            index: 0,
            total: 1,
            payload: Vec::new(),
        }]);
    }
    Ok(payload
        .chunks(cap)
        .enumerate()
        .map(|(i, c)| Fragment {
            flow_id,
            index: i as u16,
            total,
            payload: c.to_vec(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ReassemblyError {
    #[error("fragment set is incomplete")]
    Incomplete,
    #[error("fragments disagree on flow id or total")]
    Inconsistent,
}

/// Reassembles one complete set, in any order.
pub fn reassemble(fragments: &[Fragment]) -> Result<Vec<u8>, ReassemblyError> {
    let first = fragments.first().ok_or(ReassemblyError::Incomplete)?;
    let total = first.total as usize;
    let mut slots: Vec<Option<&[u8]>> = vec![None; total];
    for f in fragments {
        if f.flow_id != first.flow_id || f.total != first.total || f.index >= f.total {
            return Err(ReassemblyError::Inconsistent);
        }
        slots[f.index as usize] = Some(&f.payload);
    }
    let mut out = Vec::new();
    for s in slots {
        out.extend_from_slice(s.ok_or(ReassemblyError::Incomplete)?);
    }
    Ok(out)
}

struct Partial {
    slots: Vec<Option<Vec<u8>>>,
    have: usize,
    first_seen: Timestamp,
}

/// Incremental reassembly with a per-set timeout.
pub struct Reassembler {
    partial: HashMap<u32, Partial>,
    timeout: Duration,
}

impl Default for Reassembler {
    fn default() -> Self {
        Self::new(REASSEMBLY_TIMEOUT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reassembly {
    Complete(Vec<u8>),
    /// First fragment of a new multi-fragment set.
    Started,
    Pending,
    Duplicate,
    Inconsistent,
}

impl Reassembler {
    pub fn new(timeout: Duration) -> Self {
        Self {
            partial: HashMap::new(),
            timeout,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn pending(&self) -> usize {
        self.partial.len()
    }

    pub fn insert(&mut self, frag: Fragment, now: Timestamp) -> Reassembly {
        if frag.total == 0 || frag.index >= frag.total {
            return Reassembly::Inconsistent;
        }
        if frag.total == 1 {
            return Reassembly::Complete(frag.payload);
        }
        let mut started = false;
        let p = self.partial.entry(frag.flow_id).or_insert_with(|| {
            started = true;
            Partial {
                slots: vec![None; frag.total as usize],
                have: 0,
                first_seen: now,
            }
        });
        if p.slots.len() != frag.total as usize {
            return Reassembly::Inconsistent;
        }
        let slot = &mut p.slots[frag.index as usize];
        if slot.is_some() {
            return Reassembly::Duplicate;
        }
        *slot = Some(frag.payload);
        p.have += 1;
        if p.have == p.slots.len() {
            let p = self.partial.remove(&frag.flow_id).expect("present");
            return Reassembly::Complete(p.slots.into_iter().flatten().flatten().collect());
        }
        if started {
            Reassembly::Started
        } else {
            Reassembly::Pending
        }
    }

    /// Drops the set if it is still incomplete once its timeout has passed.
    pub fn expire(&mut self, flow_id: u32, now: Timestamp) -> bool {
        match self.partial.get(&flow_id) {
            Some(p) if now.since(p.first_seen) >= self.timeout => {
                self.partial.remove(&flow_id);
                true
            }
            _ => false,
        }
    }

    pub fn expire_all(&mut self, now: Timestamp) -> Vec<u32> {
        let timeout = self.timeout;
        let mut gone: Vec<u32> = self
            .partial
            .iter()
            .filter(|(_, p)| now.since(p.first_seen) >= timeout)
            .map(|(id, _)| *id)
            .collect();
        gone.sort_unstable();
        for id in &gone {
            self.partial.remove(id);
        }
        gone
    }
}
