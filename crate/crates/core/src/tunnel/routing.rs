//! Cryptokey routing: allowed-IP prefixes bound to peers, longest-prefix match.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ConfigError, NoRoute};
use crate::crypto::SymmetricKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ipv4Prefix {
    network: Ipv4Addr,
    len: u8,
}

impl Ipv4Prefix {
    /// Host bits of `addr` are cleared.
    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, ConfigError> {
        if len > 32 {
            return Err(ConfigError::InvalidPrefix(format!("{addr}/{len}")));
        }
        let bits = u32::from(addr) & Self::mask(len);
        Ok(Self {
            network: Ipv4Addr::from(bits),
            len,
        })
    }

    fn mask(len: u8) -> u32 {
        if len == 0 {
            0
        } else {
            u32::MAX << (32 - u32::from(len))
        }
    }

    pub fn network(&self) -> Ipv4Addr {
        self.network
    }

    pub fn prefix_len(&self) -> u8 {
        self.len
    }

    pub fn contains(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & Self::mask(self.len) == u32::from(self.network)
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network, self.len)
    }
}

impl FromStr for Ipv4Prefix {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::InvalidPrefix(s.to_string());
        let (addr, len) = match s.split_once('/') {
            Some((a, l)) => (a, l.parse::<u8>().map_err(|_| bad())?),
            None => (s, 32),
        };
        let addr = addr.trim().parse::<Ipv4Addr>().map_err(|_| bad())?;
        Ipv4Prefix::new(addr, len)
    }
}

impl TryFrom<String> for Ipv4Prefix {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Ipv4Prefix> for String {
    fn from(p: Ipv4Prefix) -> String {
        p.to_string()
    }
}

/// Simulated transport address of a peer.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Endpoint(pub u32);

pub const DEFAULT_KEEPALIVE: Duration = Duration::from_secs(15);
pub const DEFAULT_RENEGOTIATE: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct PeerConfig {
    pub peer_id: u32,
    pub psk: SymmetricKey,
    pub allowed_ips: Vec<Ipv4Prefix>,
    pub endpoint: Endpoint,
    /// `None` disables passive keepalive.
    pub keepalive_interval: Option<Duration>,
    pub renegotiate_timeout: Duration,
}

impl PeerConfig {
    pub fn new(peer_id: u32, psk: SymmetricKey) -> Self {
        Self {
            peer_id,
            psk,
            allowed_ips: Vec::new(),
            endpoint: Endpoint(peer_id),
            keepalive_interval: Some(DEFAULT_KEEPALIVE),
            renegotiate_timeout: DEFAULT_RENEGOTIATE,
        }
    }

    pub fn allow(mut self, prefix: Ipv4Prefix) -> Self {
        self.allowed_ips.push(prefix);
        self
    }

    pub fn with_keepalive(mut self, interval: Option<Duration>) -> Self {
        self.keepalive_interval = interval;
        self
    }

    pub fn with_renegotiate_timeout(mut self, timeout: Duration) -> Self {
        self.renegotiate_timeout = timeout;
        self
    }

    pub fn is_allowed_source(&self, addr: Ipv4Addr) -> bool {
        self.allowed_ips.iter().any(|p| p.contains(addr))
    }

    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        if let Some(k) = self.keepalive_interval {
            if k >= self.renegotiate_timeout {
                return Err(ConfigError::KeepaliveNotBelowTimeout {
                    peer_id: self.peer_id,
                });
            }
        }
        Ok(())
    }
}

/// Configured peers plus a per-prefix-length index for longest-prefix match.
#[derive(Debug, Clone)]
pub struct PeerTable {
    peers: BTreeMap<u32, PeerConfig>,
    // index[len] maps a masked network to the owning peer
    index: Vec<HashMap<u32, u32>>,
}

impl Default for PeerTable {
    fn default() -> Self {
        Self {
            peers: BTreeMap::new(),
            index: vec![HashMap::new(); 33],
        }
    }
}

impl PeerTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, peer: PeerConfig) -> Result<(), ConfigError> {
        peer.validate()?;
        if self.peers.contains_key(&peer.peer_id) {
            return Err(ConfigError::DuplicatePeer(peer.peer_id));
        }
        for prefix in &peer.allowed_ips {
            let slot = &self.index[usize::from(prefix.prefix_len())];
            if let Some(&owner) = slot.get(&u32::from(prefix.network())) {
                if owner != peer.peer_id {
                    return Err(ConfigError::DuplicatePrefix {
                        prefix: *prefix,
                        owner,
                    });
                }
            }
        }
        for prefix in &peer.allowed_ips {
            self.index[usize::from(prefix.prefix_len())]
                .insert(u32::from(prefix.network()), peer.peer_id);
        }
        self.peers.insert(peer.peer_id, peer);
        Ok(())
    }

    pub fn get(&self, peer_id: u32) -> Option<&PeerConfig> {
        self.peers.get(&peer_id)
    }

    pub(crate) fn get_mut(&mut self, peer_id: u32) -> Option<&mut PeerConfig> {
        self.peers.get_mut(&peer_id)
    }

    pub fn peers(&self) -> impl Iterator<Item = &PeerConfig> {
        self.peers.values()
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }

    pub fn route_lookup(&self, dest: Ipv4Addr) -> Result<u32, NoRoute> {
        let addr = u32::from(dest);
        for len in (0..=32u8).rev() {
            let net = addr & Ipv4Prefix::mask(len);
            if let Some(&peer) = self.index[usize::from(len)].get(&net) {
                return Ok(peer);
            }
        }
        Err(NoRoute(dest))
    }
}

pub fn route_lookup(table: &PeerTable, dest: Ipv4Addr) -> Result<u32, NoRoute> {
    table.route_lookup(dest)
}
