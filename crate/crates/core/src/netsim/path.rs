//! Client/server path: an encapsulation stack over a pair of links, behind a
//! middlebox. Upper-layer datagrams go in, get fragmented to fit the carrier,
//! cross a bare or reliable carrier and come out reassembled.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dpi::{DpiAction, DpiPolicy};
use super::fragment::{fragment, Fragment, Reassembler, Reassembly, FRAG_HEADER_LEN};
use super::link::{Link, LinkModel, TokenBucket};
use super::stack::TunnelStack;
use super::stream::{Ack, StreamParams, StreamReceiver, StreamSender};
use super::trace::{Trace, TraceKind};
use super::{Dir, Fingerprint, TransportKind};
use crate::time::Timestamp;

/// An upper-layer message. `header_overhead` covers headers that are counted
/// on the wire but not materialized (outer IP and UDP/TCP).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub flow: u32,
    pub kind: TransportKind,
    pub header_overhead: usize,
    pub bytes: Vec<u8>,
}

impl Datagram {
    pub fn new(flow: u32, kind: TransportKind, header_overhead: usize, bytes: Vec<u8>) -> Self {
        Self {
            flow,
            kind,
            header_overhead,
            bytes,
        }
    }

    pub fn wire_len(&self) -> usize {
        self.header_overhead + self.bytes.len()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            kind: self.kind,
            first_byte: self.bytes.first().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Unit {
    flow: u32,
    kind: TransportKind,
    header_overhead: usize,
    fingerprint: Fingerprint,
    frag: Fragment,
}

#[derive(Debug, Clone)]
enum Body {
    Bare(Unit),
    Segment {
        seq: u64,
        unit: Unit,
        sent_at: Timestamp,
    },
    Ack(Ack),
}

#[derive(Debug, Clone)]
pub struct WirePacket {
    body: Body,
    /// `None` for payload-free packets, which nothing can classify.
    fingerprint: Option<Fingerprint>,
    len: usize,
}

impl WirePacket {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn flow(&self) -> u32 {
        match &self.body {
            Body::Bare(u) | Body::Segment { unit: u, .. } => u.flow,
            Body::Ack(_) => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum PathEvent {
    /// A shaped packet leaves its token bucket.
    Release {
        dir: Dir,
        packet: WirePacket,
    },
    Arrive {
        dir: Dir,
        packet: WirePacket,
    },
    Retransmit {
        dir: Dir,
    },
    ReassemblyTimeout {
        dir: Dir,
        id: u32,
    },
}

/// Where a path schedules its events.
pub trait Scheduler {
    fn at(&mut self, time: Timestamp, event: PathEvent);
}

impl<E: From<PathEvent>> Scheduler for super::SimClock<E> {
    fn at(&mut self, time: Timestamp, event: PathEvent) {
        self.schedule(time, event);
    }
}

pub struct Path {
    stack: TunnelStack,
    dpi: DpiPolicy,
    links: [Link; 2],
    shapers: BTreeMap<(Dir, Fingerprint), TokenBucket>,
    senders: [StreamSender<Unit>; 2],
    receivers: [StreamReceiver<Unit>; 2],
    timer_armed: [Option<Timestamp>; 2],
    reassembly: [Reassembler; 2],
    stream: StreamParams,
    next_frag_id: u32,
    trace: Trace,
    tracing: bool,
}

impl Path {
    pub fn new(
        uplink: LinkModel,
        downlink: LinkModel,
        stack: TunnelStack,
        dpi: DpiPolicy,
        stream: StreamParams,
        seed: u64,
    ) -> Result<Self, String> {
        uplink.validate().map_err(|e| format!("uplink: {e}"))?;
        downlink.validate().map_err(|e| format!("downlink: {e}"))?;
        for (name, l) in [("uplink", &uplink), ("downlink", &downlink)] {
            if stack.payload_capacity(l.mtu).is_none() {
                return Err(format!(
                    "{name}: stack overhead {} leaves no room in mtu {}",
                    stack.total_overhead(),
                    l.mtu
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let up_seed = rng.next_u64();
        let down_seed = rng.next_u64();
        Ok(Self {
            stack,
            dpi,
            links: [Link::new(uplink, up_seed), Link::new(downlink, down_seed)],
            shapers: BTreeMap::new(),
            senders: [
                StreamSender::new(stream.window_segments),
                StreamSender::new(stream.window_segments),
            ],
            receivers: [StreamReceiver::new(), StreamReceiver::new()],
            timer_armed: [None, None],
            reassembly: [Reassembler::default(), Reassembler::default()],
            stream,
            next_frag_id: 1,
            trace: Trace::new(),
            tracing: true,
        })
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.tracing = on;
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Trace {
        std::mem::take(&mut self.trace)
    }

    pub fn stack(&self) -> &TunnelStack {
        &self.stack
    }

    pub fn link(&self, dir: Dir) -> &Link {
        &self.links[dir.index()]
    }

    /// Largest upper-layer datagram that crosses in one carrier packet.
    pub fn capacity(&self, dir: Dir) -> usize {
        self.stack
            .payload_capacity(self.links[dir.index()].model().mtu)
            .expect("checked in new")
    }

    pub fn retransmissions(&self, dir: Dir) -> u64 {
        self.senders[dir.index()].retransmissions()
    }

    fn record(&mut self, time: Timestamp, kind: TraceKind, dir: Dir, flow: u32, bytes: usize) {
        if self.tracing {
            self.trace.record(time, kind, dir, flow, bytes);
        }
    }

    fn reliable(&self, kind: TransportKind) -> bool {
        if self.stack.is_direct() {
            kind == TransportKind::Stream
        } else {
            self.stack.is_reliable()
        }
    }

    pub fn send(&mut self, dir: Dir, d: Datagram, now: Timestamp, sched: &mut impl Scheduler) {
        let fingerprint = self
            .stack
            .outer_fingerprint()
            .unwrap_or_else(|| d.fingerprint());
        let reliable = self.reliable(d.kind);
        let id = self.next_frag_id;
        self.next_frag_id = self.next_frag_id.wrapping_add(1).max(1);
        self.record(now, TraceKind::Send, dir, d.flow, d.wire_len());

        let mut buf = vec![0u8; d.header_overhead];
        buf.extend_from_slice(&d.bytes);
        let mtu = self.links[dir.index()].model().mtu;
        let overhead = self.stack.total_overhead() + FRAG_HEADER_LEN;
        let frags = fragment(&buf, mtu, overhead, id).expect("capacity checked in new");
        for f in &frags {
            self.record(now, TraceKind::Frag, dir, d.flow, f.payload.len());
        }
        for frag in frags {
            let len = self.stack.total_overhead() + frag.wire_len();
            let unit = Unit {
                flow: d.flow,
                kind: d.kind,
                header_overhead: d.header_overhead,
                fingerprint,
                frag,
            };
            if reliable {
                let segs = self.senders[dir.index()].push(unit, now);
                self.send_segments(dir, segs, now, sched);
            } else {
                let packet = WirePacket {
                    len,
                    fingerprint: Some(fingerprint),
                    body: Body::Bare(unit),
                };
                self.police(dir, packet, now, sched);
            }
        }
    }

    fn police(&mut self, dir: Dir, packet: WirePacket, now: Timestamp, sched: &mut impl Scheduler) {
        let action = packet
            .fingerprint
            .map(|fp| self.dpi.classify(fp))
            .unwrap_or(DpiAction::Allow);
        match action {
            DpiAction::Allow => self.transmit(dir, packet, now, sched),
            DpiAction::Block => {
                let flow = packet.flow();
                self.record(now, TraceKind::Block, dir, flow, packet.len);
            }
            DpiAction::Throttle(f) => {
                let fp = packet.fingerprint.expect("classified");
                let model = self.links[dir.index()].model().clone();
                let bucket = self
                    .shapers
                    .entry((dir, fp))
                    .or_insert_with(|| TokenBucket::new(model.bandwidth_kbps * f, model.mtu));
                let depart = bucket.admit(packet.len, now);
                if depart > now {
                    let flow = packet.flow();
                    self.record(now, TraceKind::Shape, dir, flow, packet.len);
                    sched.at(depart, PathEvent::Release { dir, packet });
                } else {
                    self.transmit(dir, packet, now, sched);
                }
            }
        }
    }

    fn transmit(
        &mut self,
        dir: Dir,
        packet: WirePacket,
        now: Timestamp,
        sched: &mut impl Scheduler,
    ) {
        let flow = packet.flow();
        let kind = match &packet.body {
            Body::Ack(_) => TraceKind::Ack,
            _ => TraceKind::Tx,
        };
        self.record(now, kind, dir, flow, packet.len);
        match self.links[dir.index()]
            .schedule_send(packet.len, now)
            .expect("fragments fit the mtu")
        {
            Some(at) => sched.at(at, PathEvent::Arrive { dir, packet }),
            None => self.record(now, TraceKind::Loss, dir, flow, packet.len),
        }
    }

    fn arm_timer(&mut self, dir: Dir, sched: &mut impl Scheduler) {
        let i = dir.index();
        if let Some(d) = self.senders[i].deadline() {
            if self.timer_armed[i].is_none_or(|armed| d < armed) {
                self.timer_armed[i] = Some(d);
                sched.at(d, PathEvent::Retransmit { dir });
            }
        }
    }

    fn send_segments(
        &mut self,
        dir: Dir,
        segs: Vec<super::stream::Segment<Unit>>,
        now: Timestamp,
        sched: &mut impl Scheduler,
    ) {
        for s in segs {
            let len = self.stack.total_overhead() + s.unit.frag.wire_len();
            let fingerprint = Some(s.unit.fingerprint);
            let retransmit = s.retransmit;
            let packet = WirePacket {
                len,
                fingerprint,
                body: Body::Segment {
                    seq: s.seq,
                    unit: s.unit,
                    sent_at: s.sent_at,
                },
            };
            if retransmit {
                self.record(now, TraceKind::Retransmit, dir, packet.flow(), packet.len);
            }
            self.police(dir, packet, now, sched);
        }
        self.arm_timer(dir, sched);
    }

    /// Handles one path event, returning datagrams that completed reassembly.
    pub fn handle(
        &mut self,
        event: PathEvent,
        now: Timestamp,
        sched: &mut impl Scheduler,
    ) -> Vec<(Dir, Datagram)> {
        match event {
            PathEvent::Release { dir, packet } => {
                self.transmit(dir, packet, now, sched);
                Vec::new()
            }
            PathEvent::Retransmit { dir } => {
                let i = dir.index();
                self.timer_armed[i] = None;
                let segs = self.senders[i].on_timeout(now);
                self.send_segments(dir, segs, now, sched);
                Vec::new()
            }
            PathEvent::ReassemblyTimeout { dir, id } => {
                if self.reassembly[dir.index()].expire(id, now) {
                    self.record(now, TraceKind::ReassemblyTimeout, dir, 0, 0);
                }
                Vec::new()
            }
            PathEvent::Arrive { dir, packet } => {
                let flow = packet.flow();
                self.record(now, TraceKind::Deliver, dir, flow, packet.len);
                match packet.body {
                    Body::Bare(unit) => {
                        self.reassemble(dir, unit, now, sched).into_iter().collect()
                    }
                    Body::Segment { seq, unit, sent_at } => {
                        let (units, ack) =
                            self.receivers[dir.index()].on_segment(seq, unit, sent_at);
                        let ack_packet = WirePacket {
                            len: self.stream.ack_bytes,
                            fingerprint: None,
                            body: Body::Ack(ack),
                        };
                        self.transmit(dir.reverse(), ack_packet, now, sched);
                        units
                            .into_iter()
                            .filter_map(|u| self.reassemble(dir, u, now, sched))
                            .collect()
                    }
                    Body::Ack(ack) => {
                        // an ack travelling `dir` acknowledges data sent the other way
                        let data_dir = dir.reverse();
                        let segs = self.senders[data_dir.index()].on_ack(ack, now);
                        self.send_segments(data_dir, segs, now, sched);
                        Vec::new()
                    }
                }
            }
        }
    }

    fn reassemble(
        &mut self,
        dir: Dir,
        unit: Unit,
        now: Timestamp,
        sched: &mut impl Scheduler,
    ) -> Option<(Dir, Datagram)> {
        let id = unit.frag.flow_id;
        match self.reassembly[dir.index()].insert(unit.frag, now) {
            Reassembly::Complete(mut buf) => {
                let wire_len = buf.len();
                self.record(now, TraceKind::Reassembled, dir, unit.flow, wire_len);
                let bytes = buf.split_off(unit.header_overhead.min(buf.len()));
                Some((
                    dir,
                    Datagram {
                        flow: unit.flow,
                        kind: unit.kind,
                        header_overhead: unit.header_overhead,
                        bytes,
                    },
                ))
            }
            Reassembly::Started => {
                let timeout: Duration = self.reassembly[dir.index()].timeout();
                sched.at(now + timeout, PathEvent::ReassemblyTimeout { dir, id });
                None
            }
            _ => None,
        }
    }
}
