use serde::{Deserialize, Serialize};

use super::fragment::FRAG_HEADER_LEN;
use super::{Fingerprint, TransportKind};

/// One encapsulation layer, as seen on the wire outside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    #[serde(default)]
    pub name: String,
    pub kind: TransportKind,
    pub overhead_bytes: usize,
    /// First payload byte an observer sees on this layer's packets.
    pub signature: u8,
}

impl Layer {
    pub fn new(name: &str, kind: TransportKind, overhead_bytes: usize, signature: u8) -> Self {
        Self {
            name: name.to_string(),
            kind,
            overhead_bytes,
            signature,
        }
    }
}

/// Ordered innermost first; the last layer is what the network sees.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TunnelStack {
    pub layers: Vec<Layer>,
}

impl TunnelStack {
    pub fn direct() -> Self {
        Self::default()
    }

    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn is_direct(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn total_overhead(&self) -> usize {
        self.layers.iter().map(|l| l.overhead_bytes).sum()
    }

    /// Any stream layer turns the whole carrier into one reliable byte stream.
    pub fn is_reliable(&self) -> bool {
        self.layers.iter().any(|l| l.kind == TransportKind::Stream)
    }

    pub fn outer_fingerprint(&self) -> Option<Fingerprint> {
        self.layers.last().map(|l| Fingerprint {
            kind: l.kind,
            first_byte: l.signature,
        })
    }

    /// Payload room inside each layer, innermost first, for a carrier of `mtu`.
    /// `None` where the cumulative overhead exhausts the mtu.
    pub fn capacities(&self, mtu: usize) -> Vec<Option<usize>> {
        let mut room = Some(mtu);
        let mut out: Vec<Option<usize>> = self
            .layers
            .iter()
            .rev()
            .map(|l| {
                room = room
                    .and_then(|r| r.checked_sub(l.overhead_bytes))
                    .filter(|r| *r > 0);
                room
            })
            .collect();
        out.reverse();
        out
    }

    /// Bytes of upper-layer datagram that fit in one carrier packet, after the
    /// fragment header.
    pub fn payload_capacity(&self, mtu: usize) -> Option<usize> {
        mtu.checked_sub(self.total_overhead() + FRAG_HEADER_LEN)
            .filter(|c| *c > 0)
    }
}
