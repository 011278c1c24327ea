//! The fixed cipher suite: ChaCha20, Poly1305, their AEAD composition and BLAKE2s.
//!
//! Everything here is a pure function of its inputs.

pub mod blake2s;
pub mod chacha20;
pub mod poly1305;
pub mod vectors;

use std::fmt;

use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::time::Timestamp;

pub use blake2s::{blake2s, Blake2s};
pub use chacha20::{chacha20_keystream, chacha20_xor};
pub use poly1305::poly1305_tag;

pub const KEY_LEN: usize = 32;
pub const TAG_LEN: usize = 16;

/// 256-bit secret. Equality is constant time.
#[derive(Clone)]
pub struct SymmetricKey([u8; KEY_LEN]);

impl SymmetricKey {
    pub const fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        SymmetricKey(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; KEY_LEN]>::try_from(bytes).ok().map(SymmetricKey)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        hex::decode(s.trim())
            .ok()
            .and_then(|b| Self::from_slice(&b))
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl PartialEq for SymmetricKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.ct_eq(&other.0).into()
    }
}

impl Eq for SymmetricKey {}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

/// Per-direction message counter. Encoded as four zero bytes followed by the
/// little-endian counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nonce(pub u64);

impl Nonce {
    pub const fn new(counter: u64) -> Self {
        Nonce(counter)
    }

    pub fn to_bytes(self) -> [u8; 12] {
        let mut out = [0u8; 12];
        out[4..].copy_from_slice(&self.0.to_le_bytes());
        out
    }
}

#[derive(Debug, Clone, Copy, Eq)]
pub struct AuthTag(pub [u8; TAG_LEN]);

impl PartialEq for AuthTag {
    fn eq(&self, other: &Self) -> bool {
        self.0.ct_eq(&other.0).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("authentication failure")]
pub struct AuthenticationFailure;

pub(crate) fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    a.ct_eq(b).into()
}

fn aead_mac(otk: &[u8; 32], ad: &[u8], ciphertext: &[u8]) -> AuthTag {
    const ZEROS: [u8; 16] = [0; 16];
    let mut mac = poly1305::Poly1305::new(otk);
    mac.update(ad);
    mac.update(&ZEROS[..(16 - ad.len() % 16) % 16]);
    mac.update(ciphertext);
    mac.update(&ZEROS[..(16 - ciphertext.len() % 16) % 16]);
    mac.update(&(ad.len() as u64).to_le_bytes());
    mac.update(&(ciphertext.len() as u64).to_le_bytes());
    mac.finalize()
}

fn one_time_key(key: &[u8; 32], nonce: &[u8; 12]) -> [u8; 32] {
    let block = chacha20::block_raw(key, 0, nonce);
    block[..32].try_into().unwrap()
}

/// ChaCha20-Poly1305 seal over a raw 12-byte nonce. Output is `ciphertext || tag`.
pub fn aead_seal_raw(key: &[u8; 32], nonce: &[u8; 12], ad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(plaintext.len() + TAG_LEN);
    out.extend_from_slice(plaintext);
    chacha20::apply_keystream_raw(key, nonce, 1, &mut out);
    let tag = aead_mac(&one_time_key(key, nonce), ad, &out);
    out.extend_from_slice(&tag.0);
    out
}

pub fn aead_open_raw(
    key: &[u8; 32],
    nonce: &[u8; 12],
    ad: &[u8],
    sealed: &[u8],
) -> Result<Vec<u8>, AuthenticationFailure> {
    if sealed.len() < TAG_LEN {
        return Err(AuthenticationFailure);
    }
    let (ciphertext, tag) = sealed.split_at(sealed.len() - TAG_LEN);
    let expected = aead_mac(&one_time_key(key, nonce), ad, ciphertext);
    if !ct_eq(&expected.0, tag) {
        return Err(AuthenticationFailure);
    }
    let mut out = ciphertext.to_vec();
    chacha20::apply_keystream_raw(key, nonce, 1, &mut out);
    Ok(out)
}

pub fn aead_seal(key: &SymmetricKey, nonce: Nonce, ad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    aead_seal_raw(key.as_bytes(), &nonce.to_bytes(), ad, plaintext)
}

pub fn aead_open(
    key: &SymmetricKey,
    nonce: Nonce,
    ad: &[u8],
    sealed: &[u8],
) -> Result<Vec<u8>, AuthenticationFailure> {
    aead_open_raw(key.as_bytes(), &nonce.to_bytes(), ad, sealed)
}

pub const LABEL_I2R: &[u8] = b"wg-lite-i2r";
pub const LABEL_R2I: &[u8] = b"wg-lite-r2i";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

/// Both directional keys of one handshake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKeys {
    pub initiator_to_responder: SymmetricKey,
    pub responder_to_initiator: SymmetricKey,
}

impl SessionKeys {
    /// `(send_key, recv_key)` as seen by `role`.
    pub fn for_role(&self, role: Role) -> (SymmetricKey, SymmetricKey) {
        match role {
            Role::Initiator => (
                self.initiator_to_responder.clone(),
                self.responder_to_initiator.clone(),
            ),
            Role::Responder => (
                self.responder_to_initiator.clone(),
                self.initiator_to_responder.clone(),
            ),
        }
    }
}

fn direction_key(psk: &SymmetricKey, label: &[u8], stamps: &[u8; 16]) -> SymmetricKey {
    let mut h = Blake2s::new_keyed(psk.as_bytes()).expect("32-byte key");
    h.update(label);
    h.update(stamps);
    SymmetricKey(h.finalize())
}

/// Keyed BLAKE2s over `label || initiator_stamp || responder_stamp` (stamps little-endian).
pub fn derive_session_keys(
    psk: &SymmetricKey,
    initiator_stamp: Timestamp,
    responder_stamp: Timestamp,
) -> SessionKeys {
    let mut stamps = [0u8; 16];
    stamps[..8].copy_from_slice(&initiator_stamp.as_nanos().to_le_bytes());
    stamps[8..].copy_from_slice(&responder_stamp.as_nanos().to_le_bytes());
    SessionKeys {
        initiator_to_responder: direction_key(psk, LABEL_I2R, &stamps),
        responder_to_initiator: direction_key(psk, LABEL_R2I, &stamps),
    }
}
