//! ChaCha20 stream cipher, 20 rounds, 256-bit key, 96-bit nonce, 32-bit block counter.

use super::{Nonce, SymmetricKey};

pub const BLOCK_LEN: usize = 64;

const SIGMA: [u32; 4] = [0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574];

#[inline(always)]
fn quarter_round(s: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize) {
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(16);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(12);
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(8);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(7);
}

fn le32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// One 64-byte keystream block for a raw 12-byte nonce.
pub fn block_raw(key: &[u8; 32], counter: u32, nonce: &[u8; 12]) -> [u8; BLOCK_LEN] {
    let mut initial = [0u32; 16];
    initial[..4].copy_from_slice(&SIGMA);
    for i in 0..8 {
        initial[4 + i] = le32(&key[i * 4..]);
    }
    initial[12] = counter;
    for i in 0..3 {
        initial[13 + i] = le32(&nonce[i * 4..]);
    }

    let mut state = initial;
    for _ in 0..10 {
        // column rounds
        quarter_round(&mut state, 0, 4, 8, 12);
        quarter_round(&mut state, 1, 5, 9, 13);
        quarter_round(&mut state, 2, 6, 10, 14);
        quarter_round(&mut state, 3, 7, 11, 15);
        // diagonal rounds
        quarter_round(&mut state, 0, 5, 10, 15);
        quarter_round(&mut state, 1, 6, 11, 12);
        quarter_round(&mut state, 2, 7, 8, 13);
        quarter_round(&mut state, 3, 4, 9, 14);
    }

    let mut out = [0u8; BLOCK_LEN];
    for (i, word) in state.iter().enumerate() {
        let v = word.wrapping_add(initial[i]);
        out[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
    }
    out
}

/// XOR `data` in place with the keystream starting at block `counter`.
pub fn apply_keystream_raw(key: &[u8; 32], nonce: &[u8; 12], counter: u32, data: &mut [u8]) {
    let mut counter = counter;
    for chunk in data.chunks_mut(BLOCK_LEN) {
        let ks = block_raw(key, counter, nonce);
        for (b, k) in chunk.iter_mut().zip(ks.iter()) {
            *b ^= k;
        }
        counter = counter.wrapping_add(1);
    }
}

pub fn chacha20_keystream(key: &SymmetricKey, counter: u32, nonce: Nonce) -> [u8; BLOCK_LEN] {
    block_raw(key.as_bytes(), counter, &nonce.to_bytes())
}

/// Encrypts or decrypts `data`. The keystream starts at block 1; block 0 is
/// reserved for the one-time MAC key of the AEAD composition.
pub fn chacha20_xor(key: &SymmetricKey, nonce: Nonce, data: &[u8]) -> Vec<u8> {
    let mut out = data.to_vec();
    apply_keystream_raw(key.as_bytes(), &nonce.to_bytes(), 1, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> Vec<u8> {
        hex::decode(s.replace([' ', '\n'], "")).unwrap()
    }

    // RFC 8439 section 2.3.2
    #[test]
    fn rfc8439_block_vector() {
        let key: [u8; 32] = h("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f")
            .try_into()
            .unwrap();
        let nonce: [u8; 12] = h("000000090000004a00000000").try_into().unwrap();
        let block = block_raw(&key, 1, &nonce);
        let expected = h(
            "10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4e\
             d2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e",
        );
        assert_eq!(block.to_vec(), expected);
    }

    #[test]
    fn keystream_xor_self_is_zero() {
        let key = SymmetricKey::from_bytes([7; 32]);
        let a = chacha20_keystream(&key, 3, Nonce::new(9));
        let b = chacha20_keystream(&key, 3, Nonce::new(9));
        assert_eq!(a, b);
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x ^ y == 0));
    }

    #[test]
    fn empty_input() {
        let key = SymmetricKey::from_bytes([1; 32]);
        assert!(chacha20_xor(&key, Nonce::new(0), &[]).is_empty());
    }
}
