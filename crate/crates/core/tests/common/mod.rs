#![allow(dead_code)]

use std::net::Ipv4Addr;

use wglite::crypto::SymmetricKey;
use wglite::tunnel::{ip, Inbound, Node, NodeConfig, PeerConfig};
use wglite::Timestamp;

pub const A: u32 = 1;
pub const B: u32 = 2;

pub fn psk() -> SymmetricKey {
    SymmetricKey::from_bytes([0x5a; 32])
}

pub fn addr_of(id: u32) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, 0, id as u8)
}

/// Two nodes that each allow the other's /32.
pub fn pair() -> (Node, Node) {
    let mut a = Node::new(A, NodeConfig::default());
    let mut b = Node::new(B, NodeConfig::default());
    a.add_peer(PeerConfig::new(B, psk()).allow(format!("{}/32", addr_of(B)).parse().unwrap()))
        .unwrap();
    b.add_peer(PeerConfig::new(A, psk()).allow(format!("{}/32", addr_of(A)).parse().unwrap()))
        .unwrap();
    (a, b)
}

/// Runs a full handshake with `initiator` starting at `t` and the response
/// processed at `t + rtt`.
pub fn establish(initiator: &mut Node, responder: &mut Node, t: Timestamp, rtt_ns: u64) {
    let init = initiator.create_handshake_init(responder.id(), t).unwrap();
    let Inbound::HandshakeAccepted { reply, .. } = responder
        .receive(&init.bytes, Timestamp(t.0 + rtt_ns / 2))
        .unwrap()
    else {
        panic!("init not accepted")
    };
    match initiator
        .receive(&reply.bytes, Timestamp(t.0 + rtt_ns))
        .unwrap()
    {
        Inbound::Established { .. } => {}
        other => panic!("unexpected {other:?}"),
    }
}

pub fn packet(from: u32, to: u32, payload: &[u8]) -> Vec<u8> {
    ip::build(addr_of(from), addr_of(to), ip::PROTO_UDP, payload)
}
