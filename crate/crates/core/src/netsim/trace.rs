use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::Dir;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceKind {
    /// Upper-layer datagram handed to the path.
    Send,
    /// One fragment of the preceding `Send`.
    Frag,
    /// Packet put on the link.
    Tx,
    Retransmit,
    Ack,
    Loss,
    Block,
    /// Packet held back by a shaper.
    Shape,
    Deliver,
    Reassembled,
    ReassemblyTimeout,
}

impl TraceKind {
    pub const ALL: [TraceKind; 11] = [
        Self::Send,
        Self::Frag,
        Self::Tx,
        Self::Retransmit,
        Self::Ack,
        Self::Loss,
        Self::Block,
        Self::Shape,
        Self::Deliver,
        Self::Reassembled,
        Self::ReassemblyTimeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Send => "send",
            Self::Frag => "frag",
            Self::Tx => "tx",
            Self::Retransmit => "retransmit",
            Self::Ack => "ack",
            Self::Loss => "loss",
            Self::Block => "block",
            Self::Shape => "shape",
            Self::Deliver => "deliver",
            Self::Reassembled => "reassembled",
            Self::ReassemblyTimeout => "reassembly_timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Timestamp,
    pub kind: TraceKind,
    pub dir: Dir,
    pub flow: u32,
    pub bytes: usize,
}

impl fmt::Display for TraceEvent {
    /// `time_ns \t kind.dir \t flow \t bytes`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}.{}\t{}\t{}",
            self.time.as_nanos(),
            self.kind.as_str(),
            self.dir.as_str(),
            self.flow,
            self.bytes
        )
    }
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [t, k, flow, bytes] = cols[..] else {
            return Err(format!("expected 4 columns, got {}", cols.len()));
        };
        let (kind, dir) = k
            .rsplit_once('.')
            .ok_or_else(|| format!("bad kind {k:?}"))?;
        let kind = TraceKind::ALL
            .into_iter()
            .find(|x| x.as_str() == kind)
            .ok_or_else(|| format!("bad kind {k:?}"))?;
        let dir = match dir {
            "up" => Dir::Up,
            "down" => Dir::Down,
            _ => return Err(format!("bad direction {dir:?}")),
        };
        Ok(Self {
            time: Timestamp(t.parse().map_err(|e| format!("time: {e}"))?),
            kind,
            dir,
            flow: flow.parse().map_err(|e| format!("flow: {e}"))?,
            bytes: bytes.parse().map_err(|e| format!("bytes: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time: Timestamp, kind: TraceKind, dir: Dir, flow: u32, bytes: usize) {
        self.events.push(TraceEvent {
            time,
            kind,
            dir,
            flow,
            bytes,
        });
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: TraceKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn of_kind(&self, kind: TraceKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = Vec::new();
        self.write_tsv(&mut out).expect("vec write");
        String::from_utf8(out).expect("ascii")
    }

    pub fn parse_tsv(text: &str) -> Result<Self, String> {
        let events = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| l.parse().map_err(|e| format!("line {}: {e}", i + 1)))
            .collect::<Result<_, _>>()?;
        Ok(Self { events })
    }

    /// Fragment count of every `Send`, in order. Fragments are recorded
    /// immediately after the datagram they belong to.
    pub fn fragments_per_send(&self) -> Vec<(TraceEvent, usize)> {
        let mut out: Vec<(TraceEvent, usize)> = Vec::new();
        for e in &self.events {
            match e.kind {
                TraceKind::Send => out.push((*e, 0)),
                TraceKind::Frag => {
                    if let Some(last) = out.last_mut() {
                        last.1 += 1;
                    }
                }
                _ => {}
            }
        }
        out
    }
}
