//! One benchmark trial: connect, ping, download, upload, all inside a private
//! simulator instance.

use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::endpoint::{self, Endpoint, Event, Output, Side, Wire, CLIENT_ADDR, SERVER_ADDR};
use super::record::TrialRecord;
use super::stats::compute_jitter;
use crate::baseline::{apply_costs, TunnelModelParams};
use crate::crypto::blake2s::blake2s;
use crate::netsim::scenario::WorkloadSpec;
use crate::netsim::{
    throughput, Datagram, Dir, Path, PathEvent, Scenario, SimClock, Trace, WINDOW,
};
use crate::time::Timestamp;
use crate::tunnel::ip;

pub const PING_FLOW: u32 = 2;
pub const BULK_FLOW_BASE: u32 = 10;
const PING_BYTES: usize = 84;
const BULK_PORT_BASE: u16 = 5001;
/// Simulated time after which a trial is abandoned.
const HORIZON: Duration = Duration::from_secs(4 * 3600);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrialError {
    #[error("{protocol} trial {trial}: tunnel never established after the retry budget")]
    EstablishmentFailure { protocol: String, trial: u32 },
    #[error("{protocol} trial {trial}: only {got} ping replies")]
    InsufficientPings {
        protocol: String,
        trial: u32,
        got: usize,
    },
    #[error("{protocol} trial {trial}: nothing delivered {dir}stream")]
    NoTransfer {
        protocol: String,
        trial: u32,
        dir: &'static str,
    },
    #[error("{protocol} trial {trial}: simulation passed its horizon")]
    Stalled { protocol: String, trial: u32 },
    #[error("invalid trial setup: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub trace: Trace,
    pub rtts_ms: Vec<f64>,
    pub reconnects: u32,
    /// Inner packet size used for the bulk transfers.
    pub bulk_packet_bytes: usize,
}

/// Seed for one (protocol, trial) pair, independent of execution order.
pub fn trial_seed(seed: u64, protocol: &str, trial: u32) -> u64 {
    let mut input = seed.to_le_bytes().to_vec();
    input.extend_from_slice(protocol.as_bytes());
    input.extend_from_slice(&trial.to_le_bytes());
    let h = blake2s(&input, None);
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

enum Ev {
    Path(PathEvent),
    Submit { side: Side, wire: Wire },
    Process { side: Side, bytes: Vec<u8> },
    Tick,
    Ping(usize),
    PingsDone,
}

impl From<PathEvent> for Ev {
    fn from(e: PathEvent) -> Self {
        Ev::Path(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Connecting,
    Pinging,
    Download,
    Upload,
    Done,
}

/// Single-core endpoint: work runs FIFO, and a userspace daemon adds a
/// wake-up delay before its output leaves, without reordering it.
struct Cpu {
    busy: Timestamp,
    floor: Timestamp,
    jitter_ns: f64,
    rng: ChaCha8Rng,
}

impl Cpu {
    fn run(&mut self, now: Timestamp, cost: Duration) -> Timestamp {
        let done = now.max(self.busy) + cost;
        self.busy = done;
        let wake = if self.jitter_ns > 0.0 {
            self.rng.random_range(0.0..self.jitter_ns) as u64
        } else {
            0
        };
        let release = Timestamp(done.0 + wake).max(self.floor);
        self.floor = release;
        release
    }
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Client => 0,
        Side::Server => 1,
    }
}

fn outbound_dir(s: Side) -> Dir {
    match s {
        Side::Client => Dir::Up,
        Side::Server => Dir::Down,
    }
}

fn receiver(d: Dir) -> Side {
    match d {
        Dir::Up => Side::Server,
        Dir::Down => Side::Client,
    }
}

struct Trial<'a> {
    params: &'a TunnelModelParams,
    workload: &'a WorkloadSpec,
    aes_ni: bool,
    tun_mtu: usize,
    clock: SimClock<Ev>,
    path: Path,
    ends: [Box<dyn Endpoint>; 2],
    cpus: [Cpu; 2],
    phase: Phase,
    connection_time: Option<Duration>,
    gave_up: bool,
    reconnects: u32,
    ping_sent: Vec<Option<Timestamp>>,
    ping_rtt: Vec<Option<Duration>>,
    expected: usize,
    received: usize,
    last_progress: Timestamp,
    down: Vec<(Timestamp, usize)>,
    up: Vec<(Timestamp, usize)>,
    bulk_packet_bytes: usize,
}

impl Trial<'_> {
    fn emit(&mut self, side: Side, out: Output, now: Timestamp) {
        for w in out.wires {
            let mut cost = apply_costs(self.params, w.bytes.len(), self.aes_ni);
            if w.handshake {
                cost += Duration::from_nanos(
                    (self.params.handshake_cpu_cost_us * 1000.0).round() as u64
                );
            }
            let at = self.cpus[side_index(side)].run(now, cost);
            self.clock.schedule(at, Ev::Submit { side, wire: w });
        }
        for e in out.events {
            match e {
                Event::Established if side == Side::Client && self.phase == Phase::Connecting => {
                    self.connection_time = Some(now.since(Timestamp::ZERO));
                    self.start_pings(now);
                }
                Event::Established => {}
                Event::Dropped => self.reconnects += 1,
                Event::GaveUp => self.gave_up = true,
                Event::Packet(p) => self.app(side, p, now),
            }
        }
    }

    fn start_pings(&mut self, now: Timestamp) {
        self.phase = Phase::Pinging;
        let interval = Duration::from_millis(self.workload.ping_interval_ms);
        let n = self.workload.ping_count;
        for k in 0..n {
            self.clock.schedule(now + interval * k as u32, Ev::Ping(k));
        }
        let done =
            now + interval * (n as u32 - 1) + Duration::from_millis(self.workload.ping_timeout_ms);
        self.clock.schedule(done, Ev::PingsDone);
    }

    fn send_ping(&mut self, k: usize, now: Timestamp) {
        let mut icmp = vec![0u8; PING_BYTES - ip::HEADER_LEN];
        icmp[0] = 8;
        icmp[6..8].copy_from_slice(&(k as u16).to_le_bytes());
        let pkt = ip::build(CLIENT_ADDR, SERVER_ADDR, ip::PROTO_ICMP, &icmp);
        self.ping_sent[k] = Some(now);
        let out = self.ends[0].send(PING_FLOW, pkt, now);
        self.emit(Side::Client, out, now);
    }

    fn app(&mut self, side: Side, p: Vec<u8>, now: Timestamp) {
        if p.len() < ip::HEADER_LEN + 8 {
            return;
        }
        match p[9] {
            ip::PROTO_ICMP => {
                let body = &p[ip::HEADER_LEN..];
                match (side, body[0]) {
                    (Side::Server, 8) => {
                        let mut reply = body.to_vec();
                        reply[0] = 0;
                        let pkt = ip::build(SERVER_ADDR, CLIENT_ADDR, ip::PROTO_ICMP, &reply);
                        let out = self.ends[1].send(PING_FLOW, pkt, now);
                        self.emit(Side::Server, out, now);
                    }
                    (Side::Client, 0) => {
                        let k = u16::from_le_bytes([body[6], body[7]]) as usize;
                        if let (Some(Some(sent)), Some(slot)) =
                            (self.ping_sent.get(k), self.ping_rtt.get_mut(k))
                        {
                            if slot.is_none() {
                                *slot = Some(now.since(*sent));
                            }
                        }
                        if self.phase == Phase::Pinging && self.ping_rtt.iter().all(Option::is_some)
                        {
                            self.start_bulk(Phase::Download, now);
                        }
                    }
                    _ => {}
                }
            }
            ip::PROTO_UDP => {
                let log = match (self.phase, side) {
                    (Phase::Download, Side::Client) => &mut self.down,
                    (Phase::Upload, Side::Server) => &mut self.up,
                    _ => return,
                };
                log.push((now, p.len()));
                self.received += p.len();
                self.last_progress = now;
                if self.received >= self.expected {
                    self.next_phase(now);
                }
            }
            _ => {}
        }
    }

    fn next_phase(&mut self, now: Timestamp) {
        match self.phase {
            Phase::Download => self.start_bulk(Phase::Upload, now),
            Phase::Upload => self.phase = Phase::Done,
            _ => {}
        }
    }

    fn start_bulk(&mut self, phase: Phase, now: Timestamp) {
        self.phase = phase;
        let (side, dir, src, dst) = match phase {
            Phase::Download => (Side::Server, Dir::Down, SERVER_ADDR, CLIENT_ADDR),
            _ => (Side::Client, Dir::Up, CLIENT_ADDR, SERVER_ADDR),
        };
        let size = self
            .params
            .inner_packet_size(self.tun_mtu, self.path.capacity(dir))
            .max(ip::HEADER_LEN + 8);
        self.bulk_packet_bytes = size;
        let count = self.workload.transfer_bytes.div_ceil(size).max(1);
        self.expected = count * size;
        self.received = 0;
        self.last_progress = now;
        let streams = self.workload.parallel_streams;
        for i in 0..count {
            let stream = (i % streams) as u16;
            let mut udp = vec![0u8; size - ip::HEADER_LEN];
            udp[2..4].copy_from_slice(&(BULK_PORT_BASE + stream).to_be_bytes());
            udp[4..6].copy_from_slice(&((size - ip::HEADER_LEN) as u16).to_be_bytes());
            let pkt = ip::build(src, dst, ip::PROTO_UDP, &udp);
            let flow = BULK_FLOW_BASE + stream as u32;
            let out = self.ends[side_index(side)].send(flow, pkt, now);
            self.emit(side, out, now);
        }
    }

    fn step(&mut self, now: Timestamp, ev: Ev) {
        match ev {
            Ev::Path(pe) => {
                for (dir, d) in self.path.handle(pe, now, &mut self.clock) {
                    let side = receiver(dir);
                    let e = &self.ends[side_index(side)];
                    let mut cost = apply_costs(self.params, d.bytes.len(), self.aes_ni);
                    if e.is_handshake(&d.bytes) {
                        cost += Duration::from_nanos(
                            (self.params.handshake_cpu_cost_us * 1000.0).round() as u64,
                        );
                    }
                    let at = self.cpus[side_index(side)].run(now, cost);
                    self.clock.schedule(
                        at,
                        Ev::Process {
                            side,
                            bytes: d.bytes,
                        },
                    );
                }
            }
            Ev::Submit { side, wire } => {
                let d = Datagram::new(
                    wire.flow,
                    self.params.transport,
                    self.params.outer_header_bytes(),
                    wire.bytes,
                );
                self.path.send(outbound_dir(side), d, now, &mut self.clock);
            }
            Ev::Process { side, bytes } => {
                let out = self.ends[side_index(side)].receive(&bytes, now);
                self.emit(side, out, now);
            }
            Ev::Tick => {
                for side in [Side::Client, Side::Server] {
                    let out = self.ends[side_index(side)].tick(now);
                    self.emit(side, out, now);
                }
                let idle = Duration::from_millis(self.workload.idle_timeout_ms);
                if matches!(self.phase, Phase::Download | Phase::Upload)
                    && now.since(self.last_progress) >= idle
                {
                    self.next_phase(now);
                }
                if self.phase != Phase::Done {
                    self.clock
                        .schedule(now + Duration::from_millis(self.workload.tick_ms), Ev::Tick);
                }
            }
            Ev::Ping(k) => {
                if self.phase == Phase::Pinging {
                    self.send_ping(k, now);
                }
            }
            Ev::PingsDone => {
                if self.phase == Phase::Pinging {
                    self.start_bulk(Phase::Download, now);
                }
            }
        }
    }
}

/// Runs one trial of `params` over `scenario`.
pub fn run_trial(
    params: &TunnelModelParams,
    scenario: &Scenario,
    workload: &WorkloadSpec,
    seed: u64,
    trial: u32,
) -> Result<TrialOutcome, TrialError> {
    workload.validate().map_err(TrialError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, &params.name, trial));
    let path = Path::new(
        scenario.uplink().clone(),
        scenario.downlink.clone(),
        scenario.stack(),
        scenario.dpi_policy(),
        scenario.stream,
        rng.next_u64(),
    )
    .map_err(TrialError::Config)?;
    let (client, server) = endpoint::pair(params, rng.next_u64());
    let jitter_ns = params.scheduling_jitter_us * 1000.0;
    let cpu = |rng: &mut ChaCha8Rng| Cpu {
        busy: Timestamp::ZERO,
        floor: Timestamp::ZERO,
        jitter_ns,
        rng: ChaCha8Rng::seed_from_u64(rng.next_u64()),
    };
    let cpus = [cpu(&mut rng), cpu(&mut rng)];
    let n = workload.ping_count;
    let mut t = Trial {
        params,
        workload,
        aes_ni: scenario.aes_ni,
        tun_mtu: scenario.inner_mtu.unwrap_or(params.tun_mtu),
        clock: SimClock::new(),
        path,
        ends: [client, server],
        cpus,
        phase: Phase::Connecting,
        connection_time: None,
        gave_up: false,
        reconnects: 0,
        ping_sent: vec![None; n],
        ping_rtt: vec![None; n],
        expected: 0,
        received: 0,
        last_progress: Timestamp::ZERO,
        down: Vec::new(),
        up: Vec::new(),
        bulk_packet_bytes: 0,
    };

    let out = t.ends[0].connect(Timestamp::ZERO);
    t.emit(Side::Client, out, Timestamp::ZERO);
    t.clock
        .schedule(Timestamp(workload.tick_ms * 1_000_000), Ev::Tick);

    let protocol = params.name.clone();
    let horizon = Timestamp::ZERO + HORIZON;
    while t.phase != Phase::Done {
        if t.gave_up && t.phase == Phase::Connecting {
            return Err(TrialError::EstablishmentFailure { protocol, trial });
        }
        let Some((now, ev)) = t.clock.pop() else {
            break;
        };
        if now > horizon {
            return Err(TrialError::Stalled { protocol, trial });
        }
        t.step(now, ev);
    }
    if t.phase == Phase::Connecting {
        return Err(TrialError::EstablishmentFailure { protocol, trial });
    }

    let rtts: Vec<f64> = t
        .ping_rtt
        .iter()
        .flatten()
        .map(|d| d.as_secs_f64() * 1000.0)
        .collect();
    let jitter = compute_jitter(&rtts).map_err(|e| TrialError::InsufficientPings {
        protocol: protocol.clone(),
        trial,
        got: e.0,
    })?;
    let dl = throughput(&t.down, WINDOW).ok_or_else(|| TrialError::NoTransfer {
        protocol: protocol.clone(),
        trial,
        dir: "down",
    })?;
    let ul = throughput(&t.up, WINDOW).ok_or_else(|| TrialError::NoTransfer {
        protocol: protocol.clone(),
        trial,
        dir: "up",
    })?;
    let avg_latency = rtts.iter().sum::<f64>() / rtts.len() as f64;
    let min_latency = rtts.iter().copied().fold(f64::INFINITY, f64::min);
    let record = TrialRecord {
        protocol,
        trial,
        avg_dl_kbps: dl.avg_kbps,
        peak_dl_kbps: dl.peak_kbps,
        avg_ul_kbps: ul.avg_kbps,
        peak_ul_kbps: ul.peak_kbps,
        avg_latency_ms: avg_latency,
        min_latency_ms: min_latency,
        jitter_ms: jitter,
        connection_time_ms: t.connection_time.expect("established").as_secs_f64() * 1000.0,
    };
    Ok(TrialOutcome {
        record,
        trace: t.path.take_trace(),
        rtts_ms: rtts,
        reconnects: t.reconnects,
        bulk_packet_bytes: t.bulk_packet_bytes,
    })
}
