//! Known-answer vectors for every primitive in the suite.
//!
//! Inputs are the published RFC 8439 / RFC 7693 / BLAKE2 KAT inputs plus a few
//! wg-lite specific cases (counter nonce layout, session key derivation).
//! Expected outputs were produced by independent implementations.

use super::*;

pub struct VectorResult {
    pub primitive: &'static str,
    pub name: &'static str,
    pub inputs: Vec<(&'static str, String)>,
    pub computed: String,
    pub expected: &'static str,
}

impl VectorResult {
    pub fn passed(&self) -> bool {
        self.computed == self.expected
    }
}

const SUNSCREEN: &[u8] = b"Ladies and Gentlemen of the class of '99: If I could offer you only one tip for the future, sunscreen would be it.";

fn seq(start: u8, len: usize) -> Vec<u8> {
    (0..len).map(|i| start.wrapping_add(i as u8)).collect()
}

fn arr<const N: usize>(v: &[u8]) -> [u8; N] {
    v.try_into().unwrap()
}

pub fn known_answers() -> Vec<VectorResult> {
    let mut out = Vec::new();

    let key = seq(0, 32);
    let nonce = hex::decode("000000090000004a00000000").unwrap();
    out.push(VectorResult {
        primitive: "chacha20",
        name: "rfc8439-2.3.2-block",
        inputs: vec![("key", hex::encode(&key)), ("nonce", hex::encode(&nonce)), ("counter", "1".into())],
        computed: hex::encode(chacha20::block_raw(&arr(&key), 1, &arr(&nonce))),
        expected: "10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4ed2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e",
    });

    let nonce = hex::decode("000000000000004a00000000").unwrap();
    let mut ct = SUNSCREEN.to_vec();
    chacha20::apply_keystream_raw(&arr(&key), &arr(&nonce), 1, &mut ct);
    out.push(VectorResult {
        primitive: "chacha20",
        name: "rfc8439-2.4.2-encrypt",
        inputs: vec![
            ("key", hex::encode(&key)),
            ("nonce", hex::encode(&nonce)),
            ("counter", "1".into()),
            ("plaintext", hex::encode(SUNSCREEN)),
        ],
        computed: hex::encode(ct),
        expected: "6e2e359a2568f98041ba0728dd0d6981e97e7aec1d4360c20a27afccfd9fae0bf91b65c5524733ab8f593dabcd62b3571639d624e65152ab8f530c359f0861d807ca0dbf500d6a6156a38e088a22b65e52bc514d16ccf806818ce91ab77937365af90bbf74a35be6b40b8eedf2785e42874d",
    });

    let otk =
        hex::decode("85d6be7857556d337f4452fe42d506a80103808afb0db2fd4abff6af4149f51b").unwrap();
    let msg = b"Cryptographic Forum Research Group";
    out.push(VectorResult {
        primitive: "poly1305",
        name: "rfc8439-2.5.2",
        inputs: vec![("key", hex::encode(&otk)), ("message", hex::encode(msg))],
        computed: hex::encode(poly1305_tag(&arr(&otk), msg).0),
        expected: "a8061dc1305136c6c22b8baf0c0127a9",
    });
    out.push(VectorResult {
        primitive: "poly1305",
        name: "zero-key",
        inputs: vec![
            ("key", hex::encode([0u8; 32])),
            ("message", hex::encode(msg)),
        ],
        computed: hex::encode(poly1305_tag(&[0; 32], msg).0),
        expected: "00000000000000000000000000000000",
    });

    let akey = seq(0x80, 32);
    let anonce = hex::decode("070000004041424344454647").unwrap();
    let aad = hex::decode("50515253c0c1c2c3c4c5c6c7").unwrap();
    out.push(VectorResult {
        primitive: "aead",
        name: "rfc8439-2.8.2",
        inputs: vec![
            ("key", hex::encode(&akey)),
            ("nonce", hex::encode(&anonce)),
            ("aad", hex::encode(&aad)),
            ("plaintext", hex::encode(SUNSCREEN)),
        ],
        computed: hex::encode(aead_seal_raw(&arr(&akey), &arr(&anonce), &aad, SUNSCREEN)),
        expected: "d31a8d34648e60db7b86afbc53ef7ec2a4aded51296e08fea9e2b5a736ee62d63dbea45e8ca9671282fafb69da92728b1a71de0a9e060b2905d6a5b67ecd3b3692ddbd7f2d778b8c9803aee328091b58fab324e4fad675945585808b4831d7bc3ff4def08e4b7a9de576d26586cec64b61161ae10b594f09e26a7e902ecbd0600691",
    });
    let wk = SymmetricKey::from_bytes([0x42; 32]);
    out.push(VectorResult {
        primitive: "aead",
        name: "counter-nonce-keepalive",
        inputs: vec![("key", hex::encode(wk.as_bytes())), ("counter", "7".into())],
        computed: hex::encode(aead_seal(&wk, Nonce::new(7), &[], &[])),
        expected: "487e9a2f0c88912bff6eda921d9e1c23",
    });
    out.push(VectorResult {
        primitive: "aead",
        name: "counter-nonce-data",
        inputs: vec![
            ("key", hex::encode(wk.as_bytes())),
            ("counter", "7".into()),
            ("aad", hex::encode(b"hdr")),
            ("plaintext", hex::encode(b"wg-lite")),
        ],
        computed: hex::encode(aead_seal(&wk, Nonce::new(7), b"hdr", b"wg-lite")),
        expected: "7e1e9ba3e60470248c7a17b784fdc07c67a64d2e38039f",
    });

    out.push(VectorResult {
        primitive: "blake2s",
        name: "empty",
        inputs: vec![("data", String::new())],
        computed: hex::encode(blake2s(b"", None)),
        expected: "69217a3079908094e11121d042354a7c1f55b6482ca1a51e1b250dfd1ed0eef9",
    });
    out.push(VectorResult {
        primitive: "blake2s",
        name: "rfc7693-abc",
        inputs: vec![("data", hex::encode(b"abc"))],
        computed: hex::encode(blake2s(b"abc", None)),
        expected: "508c5e8c327c14e2e1a72ba34eeb452f37458b209ed63a294d999b4c86675982",
    });
    out.push(VectorResult {
        primitive: "blake2s",
        name: "keyed-empty",
        inputs: vec![("key", hex::encode(&key)), ("data", String::new())],
        computed: hex::encode(blake2s(b"", Some(&key))),
        expected: "48a8997da407876b3d79c0d92325ad3b89cbb754d86ab71aee047ad345fd2c49",
    });
    let data: Vec<u8> = (0..=255u8).collect();
    out.push(VectorResult {
        primitive: "blake2s",
        name: "keyed-256",
        inputs: vec![("key", hex::encode(&key)), ("data", hex::encode(&data))],
        computed: hex::encode(blake2s(&data, Some(&key))),
        expected: "5211d1aefc0025be7f85c06b3e14e0fc645ae12bd41746485ea6d8a364a2eaee",
    });

    let psk = SymmetricKey::from_bytes([0x11; 32]);
    let keys = derive_session_keys(&psk, Timestamp(1000), Timestamp(2000));
    out.push(VectorResult {
        primitive: "kdf",
        name: "i2r",
        inputs: vec![
            ("psk", hex::encode(psk.as_bytes())),
            ("stamps", "1000,2000".into()),
        ],
        computed: hex::encode(keys.initiator_to_responder.as_bytes()),
        expected: "25afaf8e0d16884fce7b5a8f958c0e9749ed5667c2c57779f8d1d8af3aac0141",
    });
    out.push(VectorResult {
        primitive: "kdf",
        name: "r2i",
        inputs: vec![
            ("psk", hex::encode(psk.as_bytes())),
            ("stamps", "1000,2000".into()),
        ],
        computed: hex::encode(keys.responder_to_initiator.as_bytes()),
        expected: "c97311ed838df488e95f203c7a63bca0c42ce0d7ae78928f829fa61665b2ab0a",
    });

    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_vectors_pass() {
        for v in super::known_answers() {
            assert!(
                v.passed(),
                "{}/{}: {} != {}",
                v.primitive,
                v.name,
                v.computed,
                v.expected
            );
        }
    }
}
