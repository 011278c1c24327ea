use std::collections::{BTreeMap, BTreeSet};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dpi::{DpiPolicy, DpiRule};
use super::link::LinkModel;
use super::stack::{Layer, TunnelStack};
use super::stream::StreamParams;
use super::{Dir, TransportKind};

pub const MIN_INNER_MTU: usize = 68;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Traffic for a raw simulation run: `count` packets of `packet_bytes`
/// whose first byte is `first_byte`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: u32,
    pub dir: Dir,
    pub transport: TransportKind,
    pub first_byte: u8,
    pub packet_bytes: usize,
    pub count: usize,
    #[serde(default)]
    pub start_ms: f64,
    /// Zero sends the whole flow at once.
    #[serde(default)]
    pub interval_ms: f64,
}

/// What one benchmark trial does once the tunnel is up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSpec {
    pub trials: usize,
    pub ping_count: usize,
    pub ping_interval_ms: u64,
    pub ping_timeout_ms: u64,
    pub transfer_bytes: usize,
    pub parallel_streams: usize,
    /// A transfer phase ends after this long without progress.
    pub idle_timeout_ms: u64,
    pub tick_ms: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            trials: 5,
            ping_count: 20,
            ping_interval_ms: 1000,
            ping_timeout_ms: 3000,
            transfer_bytes: 2_000_000,
            parallel_streams: 4,
            idle_timeout_ms: 10_000,
            tick_ms: 250,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.ping_count < 2 {
            return Err("workload.ping_count must be >= 2 to measure jitter".into());
        }
        if self.trials == 0 {
            return Err("workload.trials must be >= 1".into());
        }
        if self.parallel_streams == 0 {
            return Err("workload.parallel_streams must be >= 1".into());
        }
        if self.ping_interval_ms == 0 || self.tick_ms == 0 || self.idle_timeout_ms == 0 {
            return Err("workload intervals must be > 0".into());
        }
        Ok(())
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub downlink: LinkModel,
    /// Defaults to the downlink model.
    #[serde(default)]
    pub uplink: Option<LinkModel>,
    /// Interface MTU of the protocol under test; presets supply one otherwise.
    #[serde(default)]
    pub inner_mtu: Option<usize>,
    #[serde(default = "yes")]
    pub aes_ni: bool,
    #[serde(default)]
    pub stream: StreamParams,
    #[serde(default, rename = "layer")]
    pub layers: Vec<Layer>,
    #[serde(default)]
    pub dpi: Vec<DpiRule>,
    #[serde(default, rename = "flow")]
    pub flows: Vec<FlowSpec>,
    #[serde(default)]
    pub workload: WorkloadSpec,
    /// Per-preset parameter overrides, keyed by preset name.
    #[serde(default)]
    pub presets: BTreeMap<String, toml::Table>,
    /// Raw runs stop here even if events remain.
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
}

fn default_horizon() -> f64 {
    600.0
}

const BUILTIN: &[(&str, &str)] = &[
    ("default", include_str!("../../scenarios/default.toml")),
    ("dpi", include_str!("../../scenarios/dpi.toml")),
    (
        "mtu_mismatch",
        include_str!("../../scenarios/mtu_mismatch.toml"),
    ),
    ("lossy", include_str!("../../scenarios/lossy.toml")),
];

impl Scenario {
    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name)?;
        Some(Self::from_toml_str(text).expect("shipped scenarios are valid"))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn uplink(&self) -> &LinkModel {
        self.uplink.as_ref().unwrap_or(&self.downlink)
    }

    pub fn link(&self, dir: Dir) -> &LinkModel {
        match dir {
            Dir::Up => self.uplink(),
            Dir::Down => &self.downlink,
        }
    }

    pub fn stack(&self) -> TunnelStack {
        TunnelStack::new(self.layers.clone())
    }

    pub fn dpi_policy(&self) -> DpiPolicy {
        DpiPolicy::from_rules(&self.dpi).expect("validated")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = ScenarioError::Invalid;
        self.downlink
            .validate()
            .map_err(|e| bad(format!("downlink: {e}")))?;
        if let Some(u) = &self.uplink {
            u.validate().map_err(|e| bad(format!("uplink: {e}")))?;
        }
        let stack = self.stack();
        for dir in [Dir::Up, Dir::Down] {
            let mtu = self.link(dir).mtu;
            if stack.payload_capacity(mtu).is_none() {
                return Err(bad(format!(
                    "layers add {} bytes, leaving no room in mtu {mtu}",
                    stack.total_overhead()
                )));
            }
        }
        DpiPolicy::from_rules(&self.dpi).map_err(bad)?;
        if let Some(m) = self.inner_mtu {
            if !(MIN_INNER_MTU..=65535).contains(&m) {
                return Err(bad(format!(
                    "inner_mtu must lie in [{MIN_INNER_MTU}, 65535], got {m}"
                )));
            }
        }
        if self.stream.window_segments == 0 {
            return Err(bad("stream.window_segments must be >= 1".into()));
        }
        let mut ids = BTreeSet::new();
        for f in &self.flows {
            if f.id == 0 || !ids.insert(f.id) {
                return Err(bad(format!("flow id {} is zero or repeated", f.id)));
            }
            if f.packet_bytes == 0 {
                return Err(bad(format!("flow {}: packet_bytes must be >= 1", f.id)));
            }
            if !(f.start_ms >= 0.0 && f.interval_ms >= 0.0) {
                return Err(bad(format!("flow {}: times must be >= 0", f.id)));
            }
        }
        self.workload.validate().map_err(bad)?;
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return Err(bad("horizon_s must be > 0".into()));
        }
        Ok(())
    }
}

/// Loads a scenario file, or a shipped scenario by name.
pub fn load_scenario(path_or_name: &str) -> Result<Scenario, ScenarioError> {
    let p = FsPath::new(path_or_name);
    if !p.exists() {
        if let Some(s) = Scenario::builtin(path_or_name) {
            return Ok(s);
        }
    }
    let text = std::fs::read_to_string(p).map_err(|source| ScenarioError::Io {
        path: path_or_name.to_string(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}
