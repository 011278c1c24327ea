//! The two ends of a benchmarked tunnel, behind one interface so the trial
//! driver treats the real wg-lite node and the synthetic models alike.

use std::collections::VecDeque;
use std::net::Ipv4Addr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::{Implementation, TunnelModelParams};
use crate::crypto::SymmetricKey;
use crate::time::Timestamp;
use crate::tunnel::{
    Emit, Inbound, Ipv4Prefix, MessageKind, Node, NodeConfig, Outgoing, PeerConfig, TickAction,
};

pub const CLIENT_ADDR: Ipv4Addr = Ipv4Addr::new(10, 8, 0, 2);
pub const SERVER_ADDR: Ipv4Addr = Ipv4Addr::new(10, 8, 0, 1);
pub const CONTROL_FLOW: u32 = 1;

const CLIENT_ID: u32 = 1;
const SERVER_ID: u32 = 2;
const QUEUE_LIMIT: usize = 64;
const HANDSHAKE_RETRANSMIT: Duration = Duration::from_secs(5);
const MAX_HANDSHAKE_RETRIES: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Client,
    Server,
}

/// One datagram out of an endpoint.
#[derive(Debug, Clone)]
pub struct Wire {
    pub flow: u32,
    pub handshake: bool,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Established,
    /// The session went away; the endpoint is reconnecting.
    Dropped,
    GaveUp,
    Packet(Vec<u8>),
}

#[derive(Debug, Default)]
pub struct Output {
    pub wires: Vec<Wire>,
    pub events: Vec<Event>,
}

pub trait Endpoint: Send {
    fn connect(&mut self, now: Timestamp) -> Output;
    fn send(&mut self, flow: u32, packet: Vec<u8>, now: Timestamp) -> Output;
    fn receive(&mut self, bytes: &[u8], now: Timestamp) -> Output;
    fn tick(&mut self, now: Timestamp) -> Output;
    fn is_handshake(&self, bytes: &[u8]) -> bool;
}

pub fn pair(params: &TunnelModelParams, seed: u64) -> (Box<dyn Endpoint>, Box<dyn Endpoint>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match params.implementation {
        Implementation::WgLite => {
            let psk = SymmetricKey::from_bytes(rng.random());
            (
                Box::new(WgEndpoint::new(Side::Client, psk.clone())),
                Box::new(WgEndpoint::new(Side::Server, psk)),
            )
        }
        Implementation::Synthetic => (
            Box::new(SyntheticEndpoint::new(
                params.clone(),
                Side::Client,
                rng.random(),
            )),
            Box::new(SyntheticEndpoint::new(
                params.clone(),
                Side::Server,
                rng.random(),
            )),
        ),
    }
}

pub struct WgEndpoint {
    node: Node,
    peer: u32,
    /// Flow ids of packets the node queued, in queue order.
    queued_flows: VecDeque<u32>,
}

impl WgEndpoint {
    pub fn new(side: Side, psk: SymmetricKey) -> Self {
        let (id, peer, allowed) = match side {
            Side::Client => (CLIENT_ID, SERVER_ID, "0.0.0.0/0"),
            Side::Server => (SERVER_ID, CLIENT_ID, "10.8.0.2/32"),
        };
        let config = NodeConfig {
            handshake_retransmit: HANDSHAKE_RETRANSMIT,
            max_handshake_retries: MAX_HANDSHAKE_RETRIES,
            queue_limit: QUEUE_LIMIT,
        };
        let mut node = Node::new(id, config);
        let prefix: Ipv4Prefix = allowed.parse().expect("literal prefix");
        node.add_peer(PeerConfig::new(peer, psk).allow(prefix))
            .expect("fresh node");
        Self {
            node,
            peer,
            queued_flows: VecDeque::new(),
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    fn wire(o: Outgoing, flow: u32) -> Wire {
        let handshake = matches!(
            o.kind,
            MessageKind::HandshakeInit | MessageKind::HandshakeResponse
        );
        Wire {
            flow,
            handshake,
            bytes: o.bytes,
        }
    }

    fn flush(&mut self, flushed: Vec<Outgoing>, out: &mut Output) {
        for o in flushed {
            let flow = self.queued_flows.pop_front().unwrap_or(CONTROL_FLOW);
            out.wires.push(Self::wire(o, flow));
        }
    }
}

impl Endpoint for WgEndpoint {
    fn connect(&mut self, now: Timestamp) -> Output {
        let mut out = Output::default();
        if let Ok(o) = self.node.create_handshake_init(self.peer, now) {
            out.wires.push(Self::wire(o, CONTROL_FLOW));
        }
        out
    }

    fn send(&mut self, flow: u32, packet: Vec<u8>, now: Timestamp) -> Output {
        let mut out = Output::default();
        match self.node.encrypt_outbound(&packet, now) {
            Ok(Emit::Transport(o)) => out.wires.push(Self::wire(o, flow)),
            Ok(Emit::Queued { handshake }) => {
                self.queued_flows.push_back(flow);
                out.wires
                    .extend(handshake.map(|o| Self::wire(o, CONTROL_FLOW)));
            }
            Err(_) => {}
        }
        out
    }

    fn receive(&mut self, bytes: &[u8], now: Timestamp) -> Output {
        let mut out = Output::default();
        match self.node.receive(bytes, now) {
            Ok(Inbound::HandshakeAccepted { reply, flushed, .. }) => {
                out.wires.push(Self::wire(reply, CONTROL_FLOW));
                self.flush(flushed, &mut out);
            }
            Ok(Inbound::Established { flushed, .. }) => {
                out.events.push(Event::Established);
                self.flush(flushed, &mut out);
            }
            Ok(Inbound::Packet { packet, .. }) => out.events.push(Event::Packet(packet)),
            Ok(Inbound::Keepalive { .. }) | Err(_) => {}
        }
        out
    }

    fn tick(&mut self, now: Timestamp) -> Output {
        let mut out = Output::default();
        for a in self.node.tick(now) {
            match a {
                TickAction::Keepalive(o) | TickAction::Retransmit(o) => {
                    out.wires.push(Self::wire(o, CONTROL_FLOW))
                }
                TickAction::Renegotiate(o) => {
                    out.events.push(Event::Dropped);
                    out.wires.push(Self::wire(o, CONTROL_FLOW));
                }
                TickAction::GaveUp { .. } => {
                    self.queued_flows.clear();
                    out.events.push(Event::GaveUp);
                }
            }
        }
        out
    }

    fn is_handshake(&self, bytes: &[u8]) -> bool {
        matches!(bytes.first(), Some(1) | Some(2))
    }
}

/// Message-count model of a certificate-based VPN: `total_round_trips`
/// request/response exchanges, then framed data.
pub struct SyntheticEndpoint {
    params: TunnelModelParams,
    side: Side,
    rng: ChaCha8Rng,
    established: bool,
    connecting: bool,
    round: u32,
    attempts: u32,
    retransmit_at: Timestamp,
    last_drop_check: Option<Timestamp>,
    queue: VecDeque<(u32, Vec<u8>)>,
}

const HS_REQUEST: u8 = 0;
const HS_RESPONSE: u8 = 1;

impl SyntheticEndpoint {
    pub fn new(params: TunnelModelParams, side: Side, seed: u64) -> Self {
        Self {
            params,
            side,
            rng: ChaCha8Rng::seed_from_u64(seed),
            established: false,
            connecting: false,
            round: 0,
            attempts: 0,
            retransmit_at: Timestamp::ZERO,
            last_drop_check: None,
            queue: VecDeque::new(),
        }
    }

    fn handshake_message(&self, round: u32, dir: u8) -> Wire {
        let size = if round < self.params.handshake_round_trips {
            self.params.handshake_message_bytes
        } else {
            self.params.certificate_message_bytes.max(4)
        }
        .max(4);
        let mut bytes = vec![0u8; size];
        bytes[0] = self.params.handshake_signature;
        bytes[1..3].copy_from_slice(&(round as u16).to_le_bytes());
        bytes[3] = dir;
        Wire {
            flow: CONTROL_FLOW,
            handshake: true,
            bytes,
        }
    }

    fn frame(&self, flow: u32, packet: Vec<u8>) -> Wire {
        let framing = self.params.framing_bytes();
        let mut bytes = vec![0u8; framing];
        bytes[0] = self.params.data_signature;
        bytes.extend_from_slice(&packet);
        Wire {
            flow,
            handshake: false,
            bytes,
        }
    }

    fn start(&mut self, now: Timestamp, out: &mut Output) {
        self.connecting = true;
        self.established = false;
        self.round = 0;
        self.attempts = 0;
        self.retransmit_at = now + HANDSHAKE_RETRANSMIT;
        out.wires.push(self.handshake_message(0, HS_REQUEST));
    }

    fn become_established(&mut self, out: &mut Output) {
        self.established = true;
        self.connecting = false;
        out.events.push(Event::Established);
        while let Some((flow, p)) = self.queue.pop_front() {
            out.wires.push(self.frame(flow, p));
        }
    }
}

impl Endpoint for SyntheticEndpoint {
    fn connect(&mut self, now: Timestamp) -> Output {
        let mut out = Output::default();
        if self.side == Side::Client {
            self.start(now, &mut out);
        }
        out
    }

    fn send(&mut self, flow: u32, packet: Vec<u8>, _now: Timestamp) -> Output {
        let mut out = Output::default();
        if self.established {
            out.wires.push(self.frame(flow, packet));
        } else if self.queue.len() < QUEUE_LIMIT {
            self.queue.push_back((flow, packet));
        }
        out
    }

    fn receive(&mut self, bytes: &[u8], now: Timestamp) -> Output {
        let mut out = Output::default();
        let Some(&first) = bytes.first() else {
            return out;
        };
        if first == self.params.handshake_signature && bytes.len() >= 4 {
            let round = u16::from_le_bytes([bytes[1], bytes[2]]) as u32;
            let total = self.params.total_round_trips();
            match (self.side, bytes[3]) {
                (Side::Server, HS_REQUEST) if round < total => {
                    out.wires.push(self.handshake_message(round, HS_RESPONSE));
                    if round + 1 == total && !self.established {
                        self.become_established(&mut out);
                    }
                }
                (Side::Client, HS_RESPONSE) if self.connecting && round == self.round => {
                    self.round += 1;
                    if self.round == total {
                        self.become_established(&mut out);
                    } else {
                        self.attempts = 0;
                        self.retransmit_at = now + HANDSHAKE_RETRANSMIT;
                        out.wires
                            .push(self.handshake_message(self.round, HS_REQUEST));
                    }
                }
                _ => {}
            }
            return out;
        }
        let framing = self.params.framing_bytes();
        if self.established && first == self.params.data_signature && bytes.len() >= framing {
            out.events.push(Event::Packet(bytes[framing..].to_vec()));
        }
        out
    }

    fn tick(&mut self, now: Timestamp) -> Output {
        let mut out = Output::default();
        if self.side != Side::Client {
            return out;
        }
        if self.connecting && now >= self.retransmit_at {
            self.attempts += 1;
            if self.attempts > MAX_HANDSHAKE_RETRIES {
                self.connecting = false;
                self.queue.clear();
                out.events.push(Event::GaveUp);
            } else {
                self.retransmit_at = now + HANDSHAKE_RETRANSMIT;
                out.wires
                    .push(self.handshake_message(self.round, HS_REQUEST));
            }
            return out;
        }
        if self.established && self.params.drop_reconnect_rate > 0.0 {
            let since = self
                .last_drop_check
                .map(|t| now.since(t))
                .unwrap_or_default();
            self.last_drop_check = Some(now);
            let p = 1.0 - (1.0 - self.params.drop_reconnect_rate).powf(since.as_secs_f64() / 60.0);
            if self.rng.random::<f64>() < p {
                out.events.push(Event::Dropped);
                self.start(now, &mut out);
            }
        }
        out
    }

    fn is_handshake(&self, bytes: &[u8]) -> bool {
        bytes.first() == Some(&self.params.handshake_signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::preset;

    fn exchange(c: &mut dyn Endpoint, s: &mut dyn Endpoint) -> u32 {
        let mut t = Timestamp::ZERO;
        let mut to_server = c.connect(t).wires;
        let mut rounds = 0;
        loop {
            t = t + Duration::from_millis(1);
            let mut to_client = Vec::new();
            for w in to_server.drain(..) {
                to_client.extend(s.receive(&w.bytes, t).wires);
            }
            rounds += 1;
            let mut done = false;
            for w in to_client {
                let out = c.receive(&w.bytes, t);
                done |= out.events.contains(&Event::Established);
                to_server.extend(out.wires);
            }
            if done {
                return rounds;
            }
            assert!(rounds < 1000);
        }
    }

    #[test]
    fn round_trip_counts_match_presets() {
        for name in crate::baseline::PRESET_NAMES {
            let p = preset(name).unwrap();
            let (mut c, mut s) = pair(&p, 1);
            assert_eq!(
                exchange(c.as_mut(), s.as_mut()),
                p.total_round_trips(),
                "{name}"
            );
        }
    }

    #[test]
    fn synthetic_data_round_trip() {
        let p = preset("openvpn_like").unwrap();
        let (mut c, mut s) = pair(&p, 1);
        exchange(c.as_mut(), s.as_mut());
        let pkt = vec![0x45, 1, 2, 3];
        let w = c.send(7, pkt.clone(), Timestamp::ZERO).wires.remove(0);
        assert_eq!(w.bytes.len(), pkt.len() + p.framing_bytes());
        assert_eq!(w.bytes[0], p.data_signature);
        assert_eq!(
            s.receive(&w.bytes, Timestamp::ZERO).events,
            vec![Event::Packet(pkt)]
        );
    }

    #[test]
    fn synthetic_gives_up() {
        let p = preset("openconnect_like").unwrap();
        let (mut c, _) = pair(&p, 1);
        c.connect(Timestamp::ZERO);
        let mut sent = 0;
        for s in 1..=200 {
            let out = c.tick(Timestamp::from_secs(s));
            sent += out.wires.len();
            if out.events.contains(&Event::GaveUp) {
                assert_eq!(sent, 10);
                return;
            }
        }
        panic!("never gave up");
    }
}
