//! The wg-lite peer: PSK handshake with timestamp anti-replay, cryptokey
//! routing, counter-framed transport with a replay window, passive keepalive
//! and timeout-driven renegotiation. Every node is symmetric; there is no
//! server role.

pub mod ip;
mod node;
pub mod replay;
pub mod routing;
pub mod wire;

use std::net::Ipv4Addr;

use thiserror::Error;

pub use node::{
    Emit, Inbound, MessageKind, Node, NodeConfig, Outgoing, PendingInit, Session, TickAction,
};
pub use replay::ReplayWindow;
pub use routing::{route_lookup, Endpoint, Ipv4Prefix, PeerConfig, PeerTable};
pub use wire::WireMessage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid prefix {0:?}")]
    InvalidPrefix(String),
    #[error("peer {0} configured twice")]
    DuplicatePeer(u32),
    #[error("prefix {prefix} already routed to peer {owner}")]
    DuplicatePrefix { prefix: Ipv4Prefix, owner: u32 },
    #[error("peer {peer_id}: keepalive interval must be below the renegotiate timeout")]
    KeepaliveNotBelowTimeout { peer_id: u32 },
    #[error("peer id {0} equals the local node id")]
    SelfPeer(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no route to {0}")]
pub struct NoRoute(pub Ipv4Addr);

/// Errors from locally initiated operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TunnelError {
    #[error("unknown peer {0}")]
    UnknownPeer(u32),
    #[error("clock regression: {now} is not after last sent stamp {last}")]
    ClockRegression {
        now: crate::time::Timestamp,
        last: crate::time::Timestamp,
    },
    #[error(transparent)]
    NoRoute(#[from] NoRoute),
    #[error("no session with peer {0}")]
    NoSession(u32),
    #[error("not an IPv4 packet")]
    MalformedPacket,
    #[error("send counter exhausted for peer {0}")]
    CounterExhausted(u32),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Why an inbound datagram was dropped. Every variant is a silent drop on
/// the wire; they differ only in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Error)]
pub enum Rejection {
    #[error("malformed frame")]
    Malformed,
    #[error("unknown message type")]
    UnknownType,
    #[error("unknown peer")]
    UnknownPeer,
    #[error("frame addressed to another node")]
    Misaddressed,
    #[error("bad mac")]
    BadMac,
    #[error("replayed timestamp")]
    ReplayedTimestamp,
    #[error("simultaneous initiation lost the tie-break")]
    SimultaneousInitiation,
    #[error("no pending initiation")]
    NoPending,
    #[error("stale echoed timestamp")]
    StaleEcho,
    #[error("unknown session")]
    UnknownSession,
    #[error("replayed counter")]
    ReplayedCounter,
    #[error("source outside allowed ips")]
    SourceOutsideAllowedIps,
    #[error("malformed inner packet")]
    MalformedInner,
}
