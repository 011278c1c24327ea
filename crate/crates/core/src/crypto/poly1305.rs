//! Poly1305 one-time authenticator using 26-bit limbs.

use super::AuthTag;

const MASK: u32 = 0x3ff_ffff;

pub struct Poly1305 {
    r: [u32; 5],
    s: [u32; 4],
    h: [u32; 5],
    pad: [u32; 4],
    buf: [u8; 16],
    buf_len: usize,
}

fn le32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

impl Poly1305 {
    pub fn new(key: &[u8; 32]) -> Self {
        let r = [
            le32(&key[0..]) & 0x3ff_ffff,
            (le32(&key[3..]) >> 2) & 0x3ff_ff03,
            (le32(&key[6..]) >> 4) & 0x3ff_c0ff,
            (le32(&key[9..]) >> 6) & 0x3f0_3fff,
            (le32(&key[12..]) >> 8) & 0x00f_ffff,
        ];
        let s = [r[1] * 5, r[2] * 5, r[3] * 5, r[4] * 5];
        let pad = [
            le32(&key[16..]),
            le32(&key[20..]),
            le32(&key[24..]),
            le32(&key[28..]),
        ];
        Self {
            r,
            s,
            h: [0; 5],
            pad,
            buf: [0; 16],
            buf_len: 0,
        }
    }

    fn block(&mut self, m: &[u8; 16], hibit: u32) {
        let [r0, r1, r2, r3, r4] = self.r.map(u64::from);
        let [s1, s2, s3, s4] = self.s.map(u64::from);
        let h = &mut self.h;

        h[0] += le32(&m[0..]) & MASK;
        h[1] += (le32(&m[3..]) >> 2) & MASK;
        h[2] += (le32(&m[6..]) >> 4) & MASK;
        h[3] += (le32(&m[9..]) >> 6) & MASK;
        h[4] += (le32(&m[12..]) >> 8) | hibit;

        let [h0, h1, h2, h3, h4] = h.map(u64::from);
        let d0 = h0 * r0 + h1 * s4 + h2 * s3 + h3 * s2 + h4 * s1;
        let mut d1 = h0 * r1 + h1 * r0 + h2 * s4 + h3 * s3 + h4 * s2;
        let mut d2 = h0 * r2 + h1 * r1 + h2 * r0 + h3 * s4 + h4 * s3;
        let mut d3 = h0 * r3 + h1 * r2 + h2 * r1 + h3 * r0 + h4 * s4;
        let mut d4 = h0 * r4 + h1 * r3 + h2 * r2 + h3 * r1 + h4 * r0;

        d1 += d0 >> 26;
        h[0] = d0 as u32 & MASK;
        d2 += d1 >> 26;
        h[1] = d1 as u32 & MASK;
        d3 += d2 >> 26;
        h[2] = d2 as u32 & MASK;
        d4 += d3 >> 26;
        h[3] = d3 as u32 & MASK;
        let c = (d4 >> 26) as u32;
        h[4] = d4 as u32 & MASK;
        h[0] += c * 5;
        h[1] += h[0] >> 26;
        h[0] &= MASK;
    }

    pub fn update(&mut self, mut data: &[u8]) {
        if self.buf_len > 0 {
            let take = (16 - self.buf_len).min(data.len());
            self.buf[self.buf_len..self.buf_len + take].copy_from_slice(&data[..take]);
            self.buf_len += take;
            data = &data[take..];
            if self.buf_len < 16 {
                return;
            }
            let b = self.buf;
            self.block(&b, 1 << 24);
            self.buf_len = 0;
        }
        let mut chunks = data.chunks_exact(16);
        for c in &mut chunks {
            self.block(c.try_into().unwrap(), 1 << 24);
        }
        let rest = chunks.remainder();
        self.buf[..rest.len()].copy_from_slice(rest);
        self.buf_len = rest.len();
    }

    pub fn finalize(mut self) -> AuthTag {
        if self.buf_len > 0 {
            let mut last = [0u8; 16];
            last[..self.buf_len].copy_from_slice(&self.buf[..self.buf_len]);
            last[self.buf_len] = 1;
            self.block(&last, 0);
        }

        let mut h = self.h;
        let mut c;
        c = h[1] >> 26;
        h[1] &= MASK;
        h[2] += c;
        c = h[2] >> 26;
        h[2] &= MASK;
        h[3] += c;
        c = h[3] >> 26;
        h[3] &= MASK;
        h[4] += c;
        c = h[4] >> 26;
        h[4] &= MASK;
        h[0] += c * 5;
        c = h[0] >> 26;
        h[0] &= MASK;
        h[1] += c;

        // g = h + 5 - 2^130, selected in constant time when h >= p
        let mut g = [0u32; 5];
        g[0] = h[0].wrapping_add(5);
        c = g[0] >> 26;
        g[0] &= MASK;
        g[1] = h[1].wrapping_add(c);
        c = g[1] >> 26;
        g[1] &= MASK;
        g[2] = h[2].wrapping_add(c);
        c = g[2] >> 26;
        g[2] &= MASK;
        g[3] = h[3].wrapping_add(c);
        c = g[3] >> 26;
        g[3] &= MASK;
        g[4] = h[4].wrapping_add(c).wrapping_sub(1 << 26);

        let select_g = (g[4] >> 31).wrapping_sub(1);
        for i in 0..5 {
            h[i] = (h[i] & !select_g) | (g[i] & select_g);
        }

        let w0 = h[0] | (h[1] << 26);
        let w1 = (h[1] >> 6) | (h[2] << 20);
        let w2 = (h[2] >> 12) | (h[3] << 14);
        let w3 = (h[3] >> 18) | (h[4] << 8);

        let mut out = [0u8; 16];
        let mut f: u64 = 0;
        for (i, w) in [w0, w1, w2, w3].into_iter().enumerate() {
            f = u64::from(w) + u64::from(self.pad[i]) + (f >> 32);
            out[i * 4..i * 4 + 4].copy_from_slice(&(f as u32).to_le_bytes());
        }
        AuthTag(out)
    }
}

pub fn poly1305_tag(one_time_key: &[u8; 32], message: &[u8]) -> AuthTag {
    let mut mac = Poly1305::new(one_time_key);
    mac.update(message);
    mac.finalize()
}
