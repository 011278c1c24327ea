//! Discrete-event network simulator: links, middlebox policy, fragmentation,
//! encapsulation stacks and a reliable stream carrier.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod clock;
pub mod dpi;
pub mod fragment;
pub mod link;
pub mod meter;
pub mod path;
pub mod run;
pub mod scenario;
pub mod stack;
pub mod stream;
pub mod trace;

pub use clock::SimClock;
pub use dpi::{classify_and_police, DpiAction, DpiPolicy, DpiRule};
pub use fragment::{fragment, reassemble, Fragment, Reassembler, FRAG_HEADER_LEN};
pub use link::{Link, LinkModel, TokenBucket};
pub use meter::{throughput, Throughput, WINDOW};
pub use path::{Datagram, Path, PathEvent};
pub use run::{run, FlowStats, RunReport};
pub use scenario::{Scenario, ScenarioError};
pub use stack::{Layer, TunnelStack};
pub use stream::{StreamParams, StreamReceiver, StreamSender};
pub use trace::{Trace, TraceEvent, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Datagram,
    Stream,
}

/// What a middlebox can see: the transport and the first payload byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    pub kind: TransportKind,
    pub first_byte: u8,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            TransportKind::Datagram => "datagram",
            TransportKind::Stream => "stream",
        };
        write!(f, "{k}/0x{:02x}", self.first_byte)
    }
}

/// Client to server is up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Up,
    Down,
}

impl Dir {
    pub fn reverse(self) -> Self {
        match self {
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Dir::Up => 0,
            Dir::Down => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dir::Up => "up",
            Dir::Down => "down",
        }
    }
}
