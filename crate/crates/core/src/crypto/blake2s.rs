//! BLAKE2s with 32-byte output, optional key of up to 32 bytes.

const IV: [u32; 8] = [
    0x6A09_E667,
    0xBB67_AE85,
    0x3C6E_F372,
    0xA54F_F53A,
    0x510E_527F,
    0x9B05_688C,
    0x1F83_D9AB,
    0x5BE0_CD19,
];

const SIGMA: [[usize; 16]; 10] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
    [14, 10, 4, 8, 9, 15, 13, 6, 1, 12, 0, 2, 11, 7, 5, 3],
    [11, 8, 12, 0, 5, 2, 15, 13, 10, 14, 3, 6, 7, 1, 9, 4],
    [7, 9, 3, 1, 13, 12, 11, 14, 2, 6, 5, 10, 4, 0, 15, 8],
    [9, 0, 5, 7, 2, 4, 10, 15, 14, 1, 11, 12, 6, 8, 3, 13],
    [2, 12, 6, 10, 0, 11, 8, 3, 4, 13, 7, 5, 15, 14, 1, 9],
    [12, 5, 1, 15, 14, 13, 4, 10, 0, 7, 6, 3, 9, 2, 8, 11],
    [13, 11, 7, 14, 12, 1, 3, 9, 5, 0, 15, 4, 8, 6, 2, 10],
    [6, 15, 14, 9, 11, 3, 0, 8, 12, 2, 13, 7, 1, 4, 10, 5],
    [10, 2, 8, 4, 7, 6, 1, 5, 15, 11, 9, 14, 3, 12, 13, 0],
];

pub const OUT_LEN: usize = 32;
pub const MAX_KEY_LEN: usize = 32;
const BLOCK_LEN: usize = 64;

#[inline(always)]
fn g(v: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize, x: u32, y: u32) {
    v[a] = v[a].wrapping_add(v[b]).wrapping_add(x);
    v[d] = (v[d] ^ v[a]).rotate_right(16);
    v[c] = v[c].wrapping_add(v[d]);
    v[b] = (v[b] ^ v[c]).rotate_right(12);
    v[a] = v[a].wrapping_add(v[b]).wrapping_add(y);
    v[d] = (v[d] ^ v[a]).rotate_right(8);
    v[c] = v[c].wrapping_add(v[d]);
    v[b] = (v[b] ^ v[c]).rotate_right(7);
}

fn compress(h: &mut [u32; 8], block: &[u8; BLOCK_LEN], t: u64, last: bool) {
    let mut m = [0u32; 16];
    for (i, w) in m.iter_mut().enumerate() {
        *w = u32::from_le_bytes(block[i * 4..i * 4 + 4].try_into().unwrap());
    }
    let mut v = [0u32; 16];
    v[..8].copy_from_slice(h);
    v[8..].copy_from_slice(&IV);
    v[12] ^= t as u32;
    v[13] ^= (t >> 32) as u32;
    if last {
        v[14] = !v[14];
    }
    for s in &SIGMA {
        g(&mut v, 0, 4, 8, 12, m[s[0]], m[s[1]]);
        g(&mut v, 1, 5, 9, 13, m[s[2]], m[s[3]]);
        g(&mut v, 2, 6, 10, 14, m[s[4]], m[s[5]]);
        g(&mut v, 3, 7, 11, 15, m[s[6]], m[s[7]]);
        g(&mut v, 0, 5, 10, 15, m[s[8]], m[s[9]]);
        g(&mut v, 1, 6, 11, 12, m[s[10]], m[s[11]]);
        g(&mut v, 2, 7, 8, 13, m[s[12]], m[s[13]]);
        g(&mut v, 3, 4, 9, 14, m[s[14]], m[s[15]]);
    }
    for i in 0..8 {
        h[i] ^= v[i] ^ v[i + 8];
    }
}

/// Incremental hasher. Keys longer than 32 bytes are rejected by [`Blake2s::new_keyed`].
#[derive(Clone)]
pub struct Blake2s {
    h: [u32; 8],
    buf: [u8; BLOCK_LEN],
    buf_len: usize,
    t: u64,
}

impl Blake2s {
    pub fn new() -> Self {
        Self::with_params(0)
    }

    pub fn new_keyed(key: &[u8]) -> Option<Self> {
        if key.len() > MAX_KEY_LEN {
            return None;
        }
        let mut hasher = Self::with_params(key.len());
        if !key.is_empty() {
            hasher.buf[..key.len()].copy_from_slice(key);
            hasher.buf_len = BLOCK_LEN;
        }
        Some(hasher)
    }

    fn with_params(key_len: usize) -> Self {
        let mut h = IV;
        h[0] ^= 0x0101_0000 ^ ((key_len as u32) << 8) ^ OUT_LEN as u32;
        Self {
            h,
            buf: [0; BLOCK_LEN],
            buf_len: 0,
            t: 0,
        }
    }

    pub fn update(&mut self, mut data: &[u8]) {
        while !data.is_empty() {
            // the final block must be compressed by finalize, so only flush a full
            // buffer once more input is known to follow
            if self.buf_len == BLOCK_LEN {
                self.t += BLOCK_LEN as u64;
                let block = self.buf;
                compress(&mut self.h, &block, self.t, false);
                self.buf_len = 0;
            }
            let take = (BLOCK_LEN - self.buf_len).min(data.len());
            self.buf[self.buf_len..self.buf_len + take].copy_from_slice(&data[..take]);
            self.buf_len += take;
            data = &data[take..];
        }
    }

    pub fn finalize(mut self) -> [u8; OUT_LEN] {
        self.t += self.buf_len as u64;
        self.buf[self.buf_len..].fill(0);
        let block = self.buf;
        compress(&mut self.h, &block, self.t, true);
        let mut out = [0u8; OUT_LEN];
        for (i, w) in self.h.iter().enumerate() {
            out[i * 4..i * 4 + 4].copy_from_slice(&w.to_le_bytes());
        }
        out
    }
}

impl Default for Blake2s {
    fn default() -> Self {
        Self::new()
    }
}

/// One-shot digest. `key` must be at most 32 bytes; longer keys panic.
pub fn blake2s(data: &[u8], key: Option<&[u8]>) -> [u8; OUT_LEN] {
    let mut hasher = match key {
        Some(k) => Blake2s::new_keyed(k).expect("blake2s key longer than 32 bytes"),
        None => Blake2s::new(),
    };
    hasher.update(data);
    hasher.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_unkeyed() {
        assert_eq!(
            hex::encode(blake2s(b"", None)),
            "69217a3079908094e11121d042354a7c1f55b6482ca1a51e1b250dfd1ed0eef9"
        );
    }

    // RFC 7693 appendix B
    #[test]
    fn abc() {
        assert_eq!(
            hex::encode(blake2s(b"abc", None)),
            "508c5e8c327c14e2e1a72ba34eeb452f37458b209ed63a294d999b4c86675982"
        );
    }

    #[test]
    fn chunked_updates_match() {
        let data: Vec<u8> = (0..=255u8).cycle().take(1000).collect();
        let whole = blake2s(&data, Some(b"k"));
        let mut h = Blake2s::new_keyed(b"k").unwrap();
        for c in data.chunks(63) {
            h.update(c);
        }
        assert_eq!(h.finalize(), whole);
    }

    #[test]
    fn oversize_key_rejected() {
        assert!(Blake2s::new_keyed(&[0; 33]).is_none());
    }
}
