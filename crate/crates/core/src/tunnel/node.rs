use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Duration;

use super::replay::ReplayWindow;
use super::routing::{Endpoint, PeerConfig, PeerTable};
use super::wire::{HandshakeInit, HandshakeResponse, TransportData, WireMessage};
use super::{ip, ConfigError, Rejection, TunnelError};
use crate::crypto::{
    aead_open, aead_seal, blake2s, derive_session_keys, Nonce, Role, SymmetricKey,
};
use crate::time::Timestamp;

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub handshake_retransmit: Duration,
    /// Retransmissions after the first initiation before giving up.
    pub max_handshake_retries: u32,
    /// Packets held per peer while a handshake is in flight. Zero drops them.
    pub queue_limit: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            handshake_retransmit: Duration::from_secs(5),
            max_handshake_retries: 10,
            queue_limit: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    HandshakeInit,
    HandshakeResponse,
    Transport,
    Keepalive,
}

/// A datagram ready to hand to the carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub peer_id: u32,
    pub endpoint: Endpoint,
    pub kind: MessageKind,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emit {
    Transport(Outgoing),
    /// No session yet; the packet was queued and a handshake may have started.
    Queued {
        handshake: Option<Outgoing>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inbound {
    HandshakeAccepted {
        peer_id: u32,
        reply: Outgoing,
        flushed: Vec<Outgoing>,
    },
    Established {
        peer_id: u32,
        setup_time: Duration,
        flushed: Vec<Outgoing>,
    },
    Packet {
        peer_id: u32,
        packet: Vec<u8>,
    },
    Keepalive {
        peer_id: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TickAction {
    Keepalive(Outgoing),
    Retransmit(Outgoing),
    /// The session went silent past the renegotiate timeout and was discarded.
    Renegotiate(Outgoing),
    GaveUp {
        peer_id: u32,
    },
}

impl TickAction {
    pub fn outgoing(&self) -> Option<&Outgoing> {
        match self {
            TickAction::Keepalive(o) | TickAction::Retransmit(o) | TickAction::Renegotiate(o) => {
                Some(o)
            }
            TickAction::GaveUp { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingInit {
    pub stamp: Timestamp,
    /// First attempt of this handshake; the setup-time metric starts here.
    pub started_at: Timestamp,
    pub retransmit_at: Timestamp,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub peer_id: u32,
    pub role: Role,
    send_key: SymmetricKey,
    recv_key: SymmetricKey,
    pub send_counter: u64,
    pub replay: ReplayWindow,
    /// Any authenticated frame, keepalives included.
    pub last_rx: Option<Timestamp>,
    /// Last frame carrying a packet.
    pub last_data_rx: Option<Timestamp>,
    pub last_tx: Option<Timestamp>,
    pub established_at: Timestamp,
    pub local_index: u32,
    pub remote_index: u32,
}

impl Session {
    fn new(
        peer_id: u32,
        role: Role,
        send_key: SymmetricKey,
        recv_key: SymmetricKey,
        now: Timestamp,
    ) -> Self {
        let local_index = session_index(&recv_key);
        let remote_index = session_index(&send_key);
        Self {
            peer_id,
            role,
            send_key,
            recv_key,
            send_counter: 0,
            replay: ReplayWindow::new(),
            last_rx: None,
            last_data_rx: None,
            last_tx: None,
            established_at: now,
            local_index,
            remote_index,
        }
    }

    fn last_activity(&self) -> Timestamp {
        [self.last_rx, self.last_tx]
            .into_iter()
            .flatten()
            .fold(self.established_at, Timestamp::max)
    }
}

/// Receiver index carried in transport frames, derived from the direction
/// key so both ends compute it without extra handshake fields.
fn session_index(direction_key: &SymmetricKey) -> u32 {
    let d = blake2s(b"wg-lite-index", Some(direction_key.as_bytes()));
    u32::from_le_bytes([d[0], d[1], d[2], d[3]])
}

#[derive(Debug, Default)]
struct PeerState {
    greatest_timestamp_seen: Option<Timestamp>,
    last_sent_stamp: Option<Timestamp>,
    pending: Option<PendingInit>,
    session: Option<Session>,
    queued: VecDeque<Vec<u8>>,
    last_setup_time: Option<Duration>,
}

/// One wg-lite endpoint. All entry points are called from a single event
/// loop; none blocks.
#[derive(Debug)]
pub struct Node {
    id: u32,
    config: NodeConfig,
    peers: PeerTable,
    state: BTreeMap<u32, PeerState>,
    by_index: HashMap<u32, u32>,
    rejections: BTreeMap<Rejection, u64>,
    routing_misses: u64,
}

impl Node {
    pub fn new(id: u32, config: NodeConfig) -> Self {
        Self {
            id,
            config,
            peers: PeerTable::new(),
            state: BTreeMap::new(),
            by_index: HashMap::new(),
            rejections: BTreeMap::new(),
            routing_misses: 0,
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn add_peer(&mut self, peer: PeerConfig) -> Result<(), ConfigError> {
        if peer.peer_id == self.id {
            return Err(ConfigError::SelfPeer(peer.peer_id));
        }
        let id = peer.peer_id;
        self.peers.insert(peer)?;
        self.state.insert(id, PeerState::default());
        Ok(())
    }

    pub fn peers(&self) -> &PeerTable {
        &self.peers
    }

    pub fn session(&self, peer_id: u32) -> Option<&Session> {
        self.state.get(&peer_id)?.session.as_ref()
    }

    pub fn pending(&self, peer_id: u32) -> Option<&PendingInit> {
        self.state.get(&peer_id)?.pending.as_ref()
    }

    pub fn greatest_timestamp_seen(&self, peer_id: u32) -> Option<Timestamp> {
        self.state.get(&peer_id)?.greatest_timestamp_seen
    }

    /// Init-sent to response-processed time of the last completed handshake
    /// this node initiated with `peer_id`.
    pub fn last_setup_time(&self, peer_id: u32) -> Option<Duration> {
        self.state.get(&peer_id)?.last_setup_time
    }

    pub fn rejection_count(&self, reason: Rejection) -> u64 {
        self.rejections.get(&reason).copied().unwrap_or(0)
    }

    pub fn rejections(&self) -> &BTreeMap<Rejection, u64> {
        &self.rejections
    }

    pub fn routing_misses(&self) -> u64 {
        self.routing_misses
    }

    pub fn set_keepalive(
        &mut self,
        peer_id: u32,
        interval: Option<Duration>,
    ) -> Result<(), TunnelError> {
        let peer = self
            .peers
            .get_mut(peer_id)
            .ok_or(TunnelError::UnknownPeer(peer_id))?;
        if interval.is_some_and(|k| k >= peer.renegotiate_timeout) {
            return Err(ConfigError::KeepaliveNotBelowTimeout { peer_id }.into());
        }
        peer.keepalive_interval = interval;
        Ok(())
    }

    fn reject<T>(&mut self, reason: Rejection) -> Result<T, Rejection> {
        *self.rejections.entry(reason).or_default() += 1;
        Err(reason)
    }

    fn outgoing(&self, peer_id: u32, kind: MessageKind, msg: WireMessage) -> Outgoing {
        let endpoint = self
            .peers
            .get(peer_id)
            .map(|p| p.endpoint)
            .unwrap_or_default();
        Outgoing {
            peer_id,
            endpoint,
            kind,
            bytes: msg.encode(),
        }
    }

    pub fn create_handshake_init(
        &mut self,
        peer_id: u32,
        now: Timestamp,
    ) -> Result<Outgoing, TunnelError> {
        let psk = self
            .peers
            .get(peer_id)
            .ok_or(TunnelError::UnknownPeer(peer_id))?
            .psk
            .clone();
        let retransmit = self.config.handshake_retransmit;
        let state = self
            .state
            .get_mut(&peer_id)
            .expect("state exists for every peer");
        if let Some(last) = state.last_sent_stamp {
            if now <= last {
                return Err(TunnelError::ClockRegression { now, last });
            }
        }
        state.last_sent_stamp = Some(now);
        let (started_at, attempts) = match &state.pending {
            Some(p) => (p.started_at, p.attempts + 1),
            None => (now, 1),
        };
        state.pending = Some(PendingInit {
            stamp: now,
            started_at,
            retransmit_at: now + retransmit,
            attempts,
        });
        let msg = HandshakeInit::signed(self.id, now, &psk);
        Ok(self.outgoing(
            peer_id,
            MessageKind::HandshakeInit,
            WireMessage::HandshakeInit(msg),
        ))
    }

    fn install_session(&mut self, session: Session) {
        let peer_id = session.peer_id;
        let state = self
            .state
            .get_mut(&peer_id)
            .expect("state exists for every peer");
        if let Some(old) = state.session.take() {
            self.by_index.remove(&old.local_index);
        }
        if let Some(other) = self.by_index.insert(session.local_index, peer_id) {
            // index collision with another peer's session; that session is unreachable now
            if other != peer_id {
                if let Some(s) = self.state.get_mut(&other) {
                    s.session = None;
                }
            }
        }
        self.state.get_mut(&peer_id).unwrap().session = Some(session);
    }

    fn flush_queue(&mut self, peer_id: u32, now: Timestamp) -> Vec<Outgoing> {
        let queued = std::mem::take(&mut self.state.get_mut(&peer_id).unwrap().queued);
        queued
            .into_iter()
            .filter_map(|pkt| self.seal_for(peer_id, &pkt, now).ok())
            .collect()
    }

    pub fn process_handshake_init(
        &mut self,
        msg: &HandshakeInit,
        now: Timestamp,
    ) -> Result<Inbound, Rejection> {
        let peer_id = msg.sender_id;
        let Some(peer) = self.peers.get(peer_id) else {
            return self.reject(Rejection::UnknownPeer);
        };
        let psk = peer.psk.clone();
        if !msg.verify(&psk) {
            return self.reject(Rejection::BadMac);
        }
        let state = self.state.get_mut(&peer_id).unwrap();
        if state
            .greatest_timestamp_seen
            .is_some_and(|g| msg.timestamp <= g)
        {
            return self.reject(Rejection::ReplayedTimestamp);
        }
        state.greatest_timestamp_seen = Some(msg.timestamp);
        if state.pending.is_some() {
            // both sides initiated: the lower node id keeps its own handshake
            if self.id < peer_id {
                return self.reject(Rejection::SimultaneousInitiation);
            }
            state.pending = None;
        }

        let keys = derive_session_keys(&psk, msg.timestamp, now);
        let (send, recv) = keys.for_role(Role::Responder);
        self.install_session(Session::new(peer_id, Role::Responder, send, recv, now));

        let resp = HandshakeResponse::signed(self.id, peer_id, msg.timestamp, now, &psk);
        let reply = self.outgoing(
            peer_id,
            MessageKind::HandshakeResponse,
            WireMessage::HandshakeResponse(resp),
        );
        let flushed = self.flush_queue(peer_id, now);
        Ok(Inbound::HandshakeAccepted {
            peer_id,
            reply,
            flushed,
        })
    }

    pub fn process_handshake_response(
        &mut self,
        msg: &HandshakeResponse,
        now: Timestamp,
    ) -> Result<Inbound, Rejection> {
        let peer_id = msg.sender_id;
        let Some(peer) = self.peers.get(peer_id) else {
            return self.reject(Rejection::UnknownPeer);
        };
        if msg.receiver_id != self.id {
            return self.reject(Rejection::Misaddressed);
        }
        let psk = peer.psk.clone();
        if !msg.verify(&psk) {
            return self.reject(Rejection::BadMac);
        }
        let state = self.state.get_mut(&peer_id).unwrap();
        let Some(pending) = state.pending.clone() else {
            return self.reject(Rejection::NoPending);
        };
        if msg.echoed_timestamp != pending.stamp {
            return self.reject(Rejection::StaleEcho);
        }
        state.pending = None;
        let setup_time = now.since(pending.started_at);
        state.last_setup_time = Some(setup_time);

        let keys = derive_session_keys(&psk, pending.stamp, msg.responder_timestamp);
        let (send, recv) = keys.for_role(Role::Initiator);
        self.install_session(Session::new(peer_id, Role::Initiator, send, recv, now));
        let flushed = self.flush_queue(peer_id, now);
        Ok(Inbound::Established {
            peer_id,
            setup_time,
            flushed,
        })
    }

    fn seal_for(
        &mut self,
        peer_id: u32,
        plaintext: &[u8],
        now: Timestamp,
    ) -> Result<Outgoing, TunnelError> {
        let state = self
            .state
            .get_mut(&peer_id)
            .ok_or(TunnelError::UnknownPeer(peer_id))?;
        let session = state
            .session
            .as_mut()
            .ok_or(TunnelError::NoSession(peer_id))?;
        let counter = session.send_counter;
        if counter == u64::MAX {
            return Err(TunnelError::CounterExhausted(peer_id));
        }
        let header = TransportData::header(session.remote_index, counter);
        let sealed = aead_seal(&session.send_key, Nonce::new(counter), &header, plaintext);
        session.send_counter += 1;
        session.last_tx = Some(now);
        let kind = if plaintext.is_empty() {
            MessageKind::Keepalive
        } else {
            MessageKind::Transport
        };
        let msg = WireMessage::TransportData(TransportData {
            receiver_id: session.remote_index,
            counter,
            sealed,
        });
        Ok(self.outgoing(peer_id, kind, msg))
    }

    /// Routes `packet` by destination address and seals it for that peer.
    pub fn encrypt_outbound(&mut self, packet: &[u8], now: Timestamp) -> Result<Emit, TunnelError> {
        let dst = ip::destination(packet).ok_or(TunnelError::MalformedPacket)?;
        let peer_id = match self.peers.route_lookup(dst) {
            Ok(p) => p,
            Err(e) => {
                self.routing_misses += 1;
                return Err(e.into());
            }
        };
        let state = &self.state[&peer_id];
        if state.session.is_some() {
            return self.seal_for(peer_id, packet, now).map(Emit::Transport);
        }
        if self.config.queue_limit == 0 {
            return Err(TunnelError::NoSession(peer_id));
        }
        let limit = self.config.queue_limit;
        let state = self.state.get_mut(&peer_id).unwrap();
        if state.queued.len() == limit {
            state.queued.pop_front();
        }
        state.queued.push_back(packet.to_vec());
        let handshake = if state.pending.is_none() {
            Some(self.create_handshake_init(peer_id, now)?)
        } else {
            None
        };
        Ok(Emit::Queued { handshake })
    }

    pub fn decrypt_inbound(
        &mut self,
        msg: &TransportData,
        now: Timestamp,
    ) -> Result<Inbound, Rejection> {
        let Some(&peer_id) = self.by_index.get(&msg.receiver_id) else {
            return self.reject(Rejection::UnknownSession);
        };
        let state = self.state.get_mut(&peer_id).unwrap();
        let session = state.session.as_mut().expect("indexed session exists");
        if !session.replay.check(msg.counter) {
            return self.reject(Rejection::ReplayedCounter);
        }
        let header = TransportData::header(msg.receiver_id, msg.counter);
        let Ok(plaintext) = aead_open(
            &session.recv_key,
            Nonce::new(msg.counter),
            &header,
            &msg.sealed,
        ) else {
            return self.reject(Rejection::BadMac);
        };
        session.replay.commit(msg.counter);
        session.last_rx = Some(now);
        if plaintext.is_empty() {
            return Ok(Inbound::Keepalive { peer_id });
        }
        let Some(src) = ip::source(&plaintext) else {
            return self.reject(Rejection::MalformedInner);
        };
        if !self.peers.get(peer_id).unwrap().is_allowed_source(src) {
            return self.reject(Rejection::SourceOutsideAllowedIps);
        }
        let session = self
            .state
            .get_mut(&peer_id)
            .unwrap()
            .session
            .as_mut()
            .unwrap();
        session.last_data_rx = Some(now);
        Ok(Inbound::Packet {
            peer_id,
            packet: plaintext,
        })
    }

    /// Decodes and dispatches one datagram.
    pub fn receive(&mut self, datagram: &[u8], now: Timestamp) -> Result<Inbound, Rejection> {
        let msg = match WireMessage::decode(datagram) {
            Ok(m) => m,
            Err(super::wire::DecodeError::UnknownType(_)) => {
                return self.reject(Rejection::UnknownType)
            }
            Err(_) => return self.reject(Rejection::Malformed),
        };
        match msg {
            WireMessage::HandshakeInit(m) => self.process_handshake_init(&m, now),
            WireMessage::HandshakeResponse(m) => self.process_handshake_response(&m, now),
            WireMessage::TransportData(m) => self.decrypt_inbound(&m, now),
        }
    }

    /// Drives timers: handshake retransmission, passive keepalive and renegotiation.
    pub fn tick(&mut self, now: Timestamp) -> Vec<TickAction> {
        let mut actions = Vec::new();
        let peer_ids: Vec<u32> = self.state.keys().copied().collect();
        for peer_id in peer_ids {
            let peer = self.peers.get(peer_id).unwrap();
            let keepalive = peer.keepalive_interval;
            let renegotiate = peer.renegotiate_timeout;
            let state = &self.state[&peer_id];

            if let Some(p) = &state.pending {
                if now >= p.retransmit_at {
                    if p.attempts > self.config.max_handshake_retries {
                        let state = self.state.get_mut(&peer_id).unwrap();
                        state.pending = None;
                        state.queued.clear();
                        actions.push(TickAction::GaveUp { peer_id });
                    } else if let Ok(o) = self.create_handshake_init(peer_id, now) {
                        actions.push(TickAction::Retransmit(o));
                    }
                }
                continue;
            }

            let Some(session) = &state.session else {
                continue;
            };
            if now.since(session.last_activity()) >= renegotiate {
                let state = self.state.get_mut(&peer_id).unwrap();
                let old = state.session.take().unwrap();
                self.by_index.remove(&old.local_index);
                if let Ok(o) = self.create_handshake_init(peer_id, now) {
                    actions.push(TickAction::Renegotiate(o));
                }
                continue;
            }

            let Some(interval) = keepalive else { continue };
            let Some(data_rx) = session.last_data_rx else {
                continue;
            };
            let nothing_said = session.last_tx.is_none_or(|tx| data_rx > tx);
            let since_tx = now.since(session.last_tx.unwrap_or(session.established_at));
            if nothing_said && since_tx >= interval {
                if let Ok(o) = self.seal_for(peer_id, &[], now) {
                    actions.push(TickAction::Keepalive(o));
                }
            }
        }
        actions
    }
}
