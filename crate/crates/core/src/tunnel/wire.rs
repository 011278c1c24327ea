//! Byte-exact frame layouts. All integers are little-endian.
//!
//! ```text
//! HandshakeInit      0x01 | 0 0 0 | sender_id u32 | timestamp u64 | mac[32]
//! HandshakeResponse  0x02 | 0 0 0 | sender_id u32 | receiver_id u32 | echoed u64 | responder u64 | mac[32]
//! TransportData      0x04 | 0 0 0 | receiver_id u32 | counter u64 | sealed[>=16]
//! ```

use thiserror::Error;

use crate::crypto::{blake2s, ct_eq, SymmetricKey, TAG_LEN};
use crate::time::Timestamp;

pub const TYPE_HANDSHAKE_INIT: u8 = 1;
pub const TYPE_HANDSHAKE_RESPONSE: u8 = 2;
pub const TYPE_TRANSPORT_DATA: u8 = 4;

pub const MAC_LEN: usize = 32;
pub const HANDSHAKE_INIT_LEN: usize = 16 + MAC_LEN;
pub const HANDSHAKE_RESPONSE_LEN: usize = 28 + MAC_LEN;
pub const TRANSPORT_HEADER_LEN: usize = 16;
/// Header plus tag: the size of a keepalive and the per-packet framing cost.
pub const TRANSPORT_OVERHEAD: usize = TRANSPORT_HEADER_LEN + TAG_LEN;
pub const KEEPALIVE_LEN: usize = TRANSPORT_OVERHEAD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("empty datagram")]
    Empty,
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("bad length {len} for message type {kind:#04x}")]
    BadLength { kind: u8, len: usize },
    #[error("non-zero reserved bytes")]
    Reserved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeInit {
    pub sender_id: u32,
    pub timestamp: Timestamp,
    pub mac: [u8; MAC_LEN],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeResponse {
    pub sender_id: u32,
    pub receiver_id: u32,
    pub echoed_timestamp: Timestamp,
    pub responder_timestamp: Timestamp,
    pub mac: [u8; MAC_LEN],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportData {
    pub receiver_id: u32,
    pub counter: u64,
    pub sealed: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    HandshakeInit(HandshakeInit),
    HandshakeResponse(HandshakeResponse),
    TransportData(TransportData),
}

fn header(kind: u8) -> [u8; 4] {
    [kind, 0, 0, 0]
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn handshake_mac(psk: &SymmetricKey, body: &[u8]) -> [u8; MAC_LEN] {
    blake2s(body, Some(psk.as_bytes()))
}

impl HandshakeInit {
    pub fn body(&self) -> [u8; 16] {
        let mut b = [0u8; 16];
        b[..4].copy_from_slice(&header(TYPE_HANDSHAKE_INIT));
        b[4..8].copy_from_slice(&self.sender_id.to_le_bytes());
        b[8..16].copy_from_slice(&self.timestamp.as_nanos().to_le_bytes());
        b
    }

    pub fn signed(sender_id: u32, timestamp: Timestamp, psk: &SymmetricKey) -> Self {
        let mut msg = Self {
            sender_id,
            timestamp,
            mac: [0; MAC_LEN],
        };
        msg.mac = handshake_mac(psk, &msg.body());
        msg
    }

    pub fn verify(&self, psk: &SymmetricKey) -> bool {
        ct_eq(&handshake_mac(psk, &self.body()), &self.mac)
    }
}

impl HandshakeResponse {
    pub fn body(&self) -> [u8; 28] {
        let mut b = [0u8; 28];
        b[..4].copy_from_slice(&header(TYPE_HANDSHAKE_RESPONSE));
        b[4..8].copy_from_slice(&self.sender_id.to_le_bytes());
        b[8..12].copy_from_slice(&self.receiver_id.to_le_bytes());
        b[12..20].copy_from_slice(&self.echoed_timestamp.as_nanos().to_le_bytes());
        b[20..28].copy_from_slice(&self.responder_timestamp.as_nanos().to_le_bytes());
        b
    }

    pub fn signed(
        sender_id: u32,
        receiver_id: u32,
        echoed_timestamp: Timestamp,
        responder_timestamp: Timestamp,
        psk: &SymmetricKey,
    ) -> Self {
        let mut msg = Self {
            sender_id,
            receiver_id,
            echoed_timestamp,
            responder_timestamp,
            mac: [0; MAC_LEN],
        };
        msg.mac = handshake_mac(psk, &msg.body());
        msg
    }

    pub fn verify(&self, psk: &SymmetricKey) -> bool {
        ct_eq(&handshake_mac(psk, &self.body()), &self.mac)
    }
}

impl TransportData {
    pub fn header(receiver_id: u32, counter: u64) -> [u8; TRANSPORT_HEADER_LEN] {
        let mut b = [0u8; TRANSPORT_HEADER_LEN];
        b[..4].copy_from_slice(&header(TYPE_TRANSPORT_DATA));
        b[4..8].copy_from_slice(&receiver_id.to_le_bytes());
        b[8..16].copy_from_slice(&counter.to_le_bytes());
        b
    }

    pub fn is_keepalive(&self) -> bool {
        self.sealed.len() == TAG_LEN
    }
}

impl WireMessage {
    pub fn kind(&self) -> u8 {
        match self {
            WireMessage::HandshakeInit(_) => TYPE_HANDSHAKE_INIT,
            WireMessage::HandshakeResponse(_) => TYPE_HANDSHAKE_RESPONSE,
            WireMessage::TransportData(_) => TYPE_TRANSPORT_DATA,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            WireMessage::HandshakeInit(m) => {
                let mut out = m.body().to_vec();
                out.extend_from_slice(&m.mac);
                out
            }
            WireMessage::HandshakeResponse(m) => {
                let mut out = m.body().to_vec();
                out.extend_from_slice(&m.mac);
                out
            }
            WireMessage::TransportData(m) => {
                let mut out = Vec::with_capacity(TRANSPORT_HEADER_LEN + m.sealed.len());
                out.extend_from_slice(&TransportData::header(m.receiver_id, m.counter));
                out.extend_from_slice(&m.sealed);
                out
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
        let kind = *bytes.first().ok_or(DecodeError::Empty)?;
        let len = bytes.len();
        let check_len = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(DecodeError::BadLength { kind, len })
            }
        };
        match kind {
            TYPE_HANDSHAKE_INIT => check_len(len == HANDSHAKE_INIT_LEN)?,
            TYPE_HANDSHAKE_RESPONSE => check_len(len == HANDSHAKE_RESPONSE_LEN)?,
            TYPE_TRANSPORT_DATA => check_len(len >= TRANSPORT_OVERHEAD)?,
            other => return Err(DecodeError::UnknownType(other)),
        }
        if bytes[1..4] != [0, 0, 0] {
            return Err(DecodeError::Reserved);
        }
        Ok(match kind {
            TYPE_HANDSHAKE_INIT => WireMessage::HandshakeInit(HandshakeInit {
                sender_id: u32_at(bytes, 4),
                timestamp: Timestamp(u64_at(bytes, 8)),
                mac: bytes[16..48].try_into().unwrap(),
            }),
            TYPE_HANDSHAKE_RESPONSE => WireMessage::HandshakeResponse(HandshakeResponse {
                sender_id: u32_at(bytes, 4),
                receiver_id: u32_at(bytes, 8),
                echoed_timestamp: Timestamp(u64_at(bytes, 12)),
                responder_timestamp: Timestamp(u64_at(bytes, 20)),
                mac: bytes[28..60].try_into().unwrap(),
            }),
            _ => WireMessage::TransportData(TransportData {
                receiver_id: u32_at(bytes, 4),
                counter: u64_at(bytes, 8),
                sealed: bytes[TRANSPORT_HEADER_LEN..].to_vec(),
            }),
        })
    }
}
