//! Cost models for the protocols under comparison. `wireguard_like` runs the
//! real wg-lite state machine; the others are synthetic.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::TransportKind;

pub const WIREGUARD_LIKE: &str = "wireguard_like";
pub const OPENVPN_LIKE: &str = "openvpn_like";
pub const OPENCONNECT_LIKE: &str = "openconnect_like";
pub const PRESET_NAMES: [&str; 3] = [WIREGUARD_LIKE, OPENCONNECT_LIKE, OPENVPN_LIKE];

const PRESETS_TOML: &str = include_str!("../data/presets.toml");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresetError {
    #[error("unknown preset {0:?} (known: wireguard_like, openconnect_like, openvpn_like)")]
    Unknown(String),
    #[error("preset {name}: {reason}")]
    Invalid { name: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implementation {
    WgLite,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelModelParams {
    #[serde(skip)]
    pub name: String,
    pub implementation: Implementation,
    pub transport: TransportKind,
    pub handshake_round_trips: u32,
    pub certificate_round_trips: u32,
    pub uses_certificates: bool,
    pub handshake_message_bytes: usize,
    pub certificate_message_bytes: usize,
    /// Per handshake message, at either end.
    pub handshake_cpu_cost_us: f64,
    /// Bytes added to each inner packet on the wire, outer headers included.
    pub header_overhead: usize,
    pub per_packet_cpu_cost_us: f64,
    pub cipher_ns_per_byte: f64,
    pub cipher_ns_per_byte_no_aes_ni: f64,
    /// Upper bound of the uniform wake-up delay a userspace daemon adds per packet.
    pub scheduling_jitter_us: f64,
    /// Chance per minute that an established session drops and reconnects.
    pub drop_reconnect_rate: f64,
    pub tun_mtu: usize,
    /// Shrinks inner packets to fit the carrier, as an MSS clamp would.
    pub clamp_to_carrier: bool,
    pub data_signature: u8,
    pub handshake_signature: u8,
}

/// Outer IPv4 plus UDP or TCP.
pub fn transport_header_bytes(kind: TransportKind) -> usize {
    match kind {
        TransportKind::Datagram => 28,
        TransportKind::Stream => 40,
    }
}

impl TunnelModelParams {
    pub fn total_round_trips(&self) -> u32 {
        self.handshake_round_trips + self.certificate_round_trips
    }

    pub fn outer_header_bytes(&self) -> usize {
        transport_header_bytes(self.transport)
    }

    /// Protocol framing carried inside the outer headers.
    pub fn framing_bytes(&self) -> usize {
        self.header_overhead - self.outer_header_bytes()
    }

    /// Inner packet size for a carrier with `capacity` bytes of payload room.
    pub fn inner_packet_size(&self, tun_mtu: usize, capacity: usize) -> usize {
        if self.clamp_to_carrier && capacity > self.header_overhead {
            tun_mtu.min(capacity - self.header_overhead)
        } else {
            tun_mtu
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.handshake_round_trips == 0 {
            return Err("handshake_round_trips must be >= 1".into());
        }
        if self.uses_certificates != (self.certificate_round_trips > 0) {
            return Err("uses_certificates must match certificate_round_trips > 0".into());
        }
        if self.header_overhead <= self.outer_header_bytes() {
            return Err(format!(
                "header_overhead must exceed the {} outer header bytes",
                self.outer_header_bytes()
            ));
        }
        if self.handshake_message_bytes == 0 {
            return Err("handshake_message_bytes must be >= 1".into());
        }
        let costs = [
            self.handshake_cpu_cost_us,
            self.per_packet_cpu_cost_us,
            self.cipher_ns_per_byte,
            self.cipher_ns_per_byte_no_aes_ni,
            self.scheduling_jitter_us,
        ];
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err("costs must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.drop_reconnect_rate) {
            return Err("drop_reconnect_rate must lie in [0, 1]".into());
        }
        if !(68..=65535).contains(&self.tun_mtu) {
            return Err("tun_mtu must lie in [68, 65535]".into());
        }
        if self.implementation == Implementation::WgLite {
            let fixed = self.transport == TransportKind::Datagram
                && self.handshake_round_trips == 1
                && self.certificate_round_trips == 0
                && self.header_overhead == 32 + 28
                && self.data_signature == crate::tunnel::wire::TYPE_TRANSPORT_DATA
                && self.handshake_signature == crate::tunnel::wire::TYPE_HANDSHAKE_INIT;
            if !fixed {
                return Err("wg-lite presets cannot change the wire protocol's shape".into());
            }
        }
        Ok(())
    }

    /// Returns a copy with the fields in `overrides` replaced.
    pub fn with_overrides(&self, overrides: &toml::Table) -> Result<Self, PresetError> {
        let invalid = |reason: String| PresetError::Invalid {
            name: self.name.clone(),
            reason,
        };
        let mut table = toml::Table::try_from(self).map_err(|e| invalid(e.to_string()))?;
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let mut p: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        p.name = self.name.clone();
        p.validate().map_err(invalid)?;
        Ok(p)
    }
}

/// Processing time for one packet of `len` bytes at one endpoint.
pub fn apply_costs(params: &TunnelModelParams, len: usize, aes_ni: bool) -> Duration {
    let per_byte = if aes_ni {
        params.cipher_ns_per_byte
    } else {
        params.cipher_ns_per_byte_no_aes_ni
    };
    let ns = params.per_packet_cpu_cost_us * 1000.0 + per_byte * len as f64;
    Duration::from_nanos(ns.round() as u64)
}

pub fn preset(name: &str) -> Result<TunnelModelParams, PresetError> {
    let all: toml::Table = toml::from_str(PRESETS_TOML).expect("shipped presets parse");
    let value = all
        .get(name)
        .ok_or_else(|| PresetError::Unknown(name.to_string()))?;
    let mut p: TunnelModelParams =
        value
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| PresetError::Invalid {
                name: name.to_string(),
                reason: e.to_string(),
            })?;
    p.name = name.to_string();
    p.validate().map_err(|reason| PresetError::Invalid {
        name: name.to_string(),
        reason,
    })?;
    Ok(p)
}

/// Expands `all` and comma-separated lists; rejects unknown and repeated names.
pub fn resolve_presets(spec: &str) -> Result<Vec<TunnelModelParams>, PresetError> {
    let names: Vec<&str> = if spec.trim() == "all" {
        PRESET_NAMES.to_vec()
    } else {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect()
    };
    if names.is_empty() {
        return Err(PresetError::Unknown(spec.to_string()));
    }
    let mut out: Vec<TunnelModelParams> = Vec::new();
    for n in names {
        if out.iter().any(|p| p.name == n) {
            return Err(PresetError::Invalid {
                name: n.to_string(),
                reason: "listed twice".into(),
            });
        }
        out.push(preset(n)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_presets_load() {
        for n in PRESET_NAMES {
            let p = preset(n).unwrap();
            assert_eq!(p.name, n);
        }
        assert_eq!(
            preset("ipsec_like"),
            Err(PresetError::Unknown("ipsec_like".into()))
        );
    }

    #[test]
    fn handshake_costs_order() {
        let w = preset(WIREGUARD_LIKE).unwrap();
        let oc = preset(OPENCONNECT_LIKE).unwrap();
        let ov = preset(OPENVPN_LIKE).unwrap();
        assert_eq!(w.total_round_trips(), 1);
        assert!(ov.total_round_trips() >= 5 * w.total_round_trips());
        assert!(oc.total_round_trips() >= 5 * ov.total_round_trips());
        assert!(!w.uses_certificates && ov.uses_certificates && oc.uses_certificates);
        assert_eq!(w.scheduling_jitter_us, 0.0);
    }

    #[test]
    fn costs_scale_with_length_and_aes_ni() {
        let ov = preset(OPENVPN_LIKE).unwrap();
        assert_eq!(apply_costs(&ov, 0, true), Duration::from_micros(30));
        assert_eq!(apply_costs(&ov, 1000, true), Duration::from_nanos(30_600));
        assert_eq!(apply_costs(&ov, 1000, false), Duration::from_nanos(35_000));
        let w = preset(WIREGUARD_LIKE).unwrap();
        assert_eq!(apply_costs(&w, 1000, true), apply_costs(&w, 1000, false));
    }

    #[test]
    fn overrides() {
        let ov = preset(OPENVPN_LIKE).unwrap();
        let mut t = toml::Table::new();
        t.insert("per_packet_cpu_cost_us".into(), toml::Value::Float(80.0));
        let o = ov.with_overrides(&t).unwrap();
        assert_eq!(o.per_packet_cpu_cost_us, 80.0);
        assert_eq!(o.name, OPENVPN_LIKE);
        t.insert("colour".into(), toml::Value::Integer(1));
        assert!(ov.with_overrides(&t).is_err());
        let w = preset(WIREGUARD_LIKE).unwrap();
        let mut t = toml::Table::new();
        t.insert("handshake_round_trips".into(), toml::Value::Integer(3));
        assert!(w.with_overrides(&t).is_err());
    }

    #[test]
    fn preset_lists() {
        let all = resolve_presets("all").unwrap();
        assert_eq!(
            all.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(),
            PRESET_NAMES
        );
        assert_eq!(
            resolve_presets("openvpn_like, wireguard_like")
                .unwrap()
                .len(),
            2
        );
        assert!(resolve_presets("openvpn_like,openvpn_like").is_err());
        assert!(matches!(
            resolve_presets("nope"),
            Err(PresetError::Unknown(_))
        ));
        assert!(resolve_presets("").is_err());
    }

    #[test]
    fn clamp() {
        let ov = preset(OPENVPN_LIKE).unwrap();
        assert_eq!(ov.inner_packet_size(1500, 1361), 1361 - 69);
        let w = preset(WIREGUARD_LIKE).unwrap();
        assert_eq!(w.inner_packet_size(1420, 1361), 1420);
    }
}
