use std::collections::BTreeMap;

use super::clock::SimClock;
use super::meter::{throughput, Throughput, WINDOW};
use super::path::{Datagram, Path, PathEvent};
use super::scenario::{Scenario, ScenarioError};
use super::trace::Trace;
use crate::time::Timestamp;

enum Event {
    Emit { flow: usize },
    Path(PathEvent),
}

impl From<PathEvent> for Event {
    fn from(e: PathEvent) -> Self {
        Event::Path(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats {
    pub sent: usize,
    pub delivered: usize,
    pub sent_bytes: u64,
    pub delivered_bytes: u64,
    pub throughput: Option<Throughput>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Trace,
    pub flows: BTreeMap<u32, FlowStats>,
    pub end: Timestamp,
}

/// Runs the scenario's `[[flow]]` traffic over its path until the queue
/// drains or the horizon passes.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunReport, ScenarioError> {
    scenario.validate()?;
    let mut path = Path::new(
        scenario.uplink().clone(),
        scenario.downlink.clone(),
        scenario.stack(),
        scenario.dpi_policy(),
        scenario.stream,
        seed,
    )
    .map_err(ScenarioError::Invalid)?;
    let horizon = Timestamp((scenario.horizon_s * 1e9) as u64);

    let mut clock: SimClock<Event> = SimClock::new();
    let mut emitted = vec![0usize; scenario.flows.len()];
    let mut deliveries: BTreeMap<u32, Vec<(Timestamp, usize)>> = BTreeMap::new();
    for (i, f) in scenario.flows.iter().enumerate() {
        if f.count > 0 {
            clock.schedule(
                Timestamp((f.start_ms * 1e6) as u64),
                Event::Emit { flow: i },
            );
        }
        deliveries.insert(f.id, Vec::new());
    }

    while let Some((now, ev)) = clock.pop() {
        if now > horizon {
            break;
        }
        match ev {
            Event::Emit { flow } => {
                let f = &scenario.flows[flow];
                let burst = if f.interval_ms == 0.0 { f.count } else { 1 };
                for _ in 0..burst {
                    let mut bytes = vec![0u8; f.packet_bytes];
                    bytes[0] = f.first_byte;
                    path.send(
                        f.dir,
                        Datagram::new(f.id, f.transport, 0, bytes),
                        now,
                        &mut clock,
                    );
                    emitted[flow] += 1;
                }
                if emitted[flow] < f.count {
                    clock.schedule(
                        now + std::time::Duration::from_nanos((f.interval_ms * 1e6) as u64),
                        Event::Emit { flow },
                    );
                }
            }
            Event::Path(pe) => {
                for (_, d) in path.handle(pe, now, &mut clock) {
                    if let Some(v) = deliveries.get_mut(&d.flow) {
                        v.push((now, d.wire_len()));
                    }
                }
            }
        }
    }
    let end = clock.now();

    let flows = scenario
        .flows
        .iter()
        .zip(&emitted)
        .map(|(f, &sent)| {
            let d = &deliveries[&f.id];
            let stats = FlowStats {
                sent,
                delivered: d.len(),
                sent_bytes: (sent * f.packet_bytes) as u64,
                delivered_bytes: d.iter().map(|x| x.1 as u64).sum(),
                throughput: throughput(d, WINDOW),
            };
            (f.id, stats)
        })
        .collect();
    Ok(RunReport {
        trace: path.take_trace(),
        flows,
        end,
    })
}
