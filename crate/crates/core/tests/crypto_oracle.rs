//! Cross-checks against the RustCrypto implementations on random inputs.

use blake2::digest::{FixedOutput, Update};
use chacha20::cipher::{KeyIvInit, StreamCipher, StreamCipherSeek};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use proptest::prelude::*;

use wglite::crypto::{self, chacha20::apply_keystream_raw, Nonce, SymmetricKey};

fn oracle_keystream(key: &[u8; 32], nonce: &[u8; 12], counter: u32, data: &mut [u8]) {
    let mut c = chacha20::ChaCha20::new(key.into(), nonce.into());
    c.seek(u64::from(counter) * 64);
    c.apply_keystream(data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chacha20_matches_oracle(key in any::<[u8; 32]>(), nonce in any::<[u8; 12]>(),
                               counter in 0u32..1000, data in proptest::collection::vec(any::<u8>(), 0..700)) {
        let mut ours = data.clone();
        apply_keystream_raw(&key, &nonce, counter, &mut ours);
        let mut theirs = data.clone();
        oracle_keystream(&key, &nonce, counter, &mut theirs);
        prop_assert_eq!(ours, theirs);
    }

    #[test]
    fn poly1305_matches_oracle(key in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..300)) {
        let ours = crypto::poly1305_tag(&key, &msg);
        let theirs = poly1305::Poly1305::new((&key).into()).compute_unpadded(&msg);
        prop_assert_eq!(&ours.0[..], theirs.as_slice());
    }

    #[test]
    fn aead_matches_oracle(key in any::<[u8; 32]>(), counter in any::<u64>(),
                           ad in proptest::collection::vec(any::<u8>(), 0..40),
                           pt in proptest::collection::vec(any::<u8>(), 0..600)) {
        let k = SymmetricKey::from_bytes(key);
        let n = Nonce::new(counter);
        let ours = crypto::aead_seal(&k, n, &ad, &pt);
        let cipher = chacha20poly1305::ChaCha20Poly1305::new((&key).into());
        let theirs = cipher.encrypt((&n.to_bytes()).into(), Payload { msg: &pt, aad: &ad }).unwrap();
        prop_assert_eq!(&ours, &theirs);
        prop_assert_eq!(crypto::aead_open(&k, n, &ad, &ours).unwrap(), pt);
    }

    #[test]
    fn blake2s_matches_oracle(data in proptest::collection::vec(any::<u8>(), 0..300),
                              key in proptest::collection::vec(any::<u8>(), 1..=32)) {
        let ours = crypto::blake2s(&data, None);
        let mut h = <blake2::Blake2s256 as blake2::digest::Digest>::new();
        blake2::digest::Digest::update(&mut h, &data);
        prop_assert_eq!(&ours[..], &blake2::digest::Digest::finalize(h)[..]);

        let ours = crypto::blake2s(&data, Some(&key));
        let mut mac = <blake2::Blake2sMac256 as blake2::digest::KeyInit>::new_from_slice(&key).unwrap();
        Update::update(&mut mac, &data);
        prop_assert_eq!(&ours[..], &mac.finalize_fixed()[..]);
        prop_assert_ne!(ours, crypto::blake2s(&data, None));
    }

    #[test]
    fn seal_open_identity_any_length(len in 0usize..=4096, seed in any::<u8>()) {
        let k = SymmetricKey::from_bytes([seed; 32]);
        let pt: Vec<u8> = (0..len).map(|i| (i as u8) ^ seed).collect();
        let sealed = crypto::aead_seal(&k, Nonce::new(len as u64), b"ad", &pt);
        prop_assert_eq!(sealed.len(), len + 16);
        prop_assert_eq!(crypto::aead_open(&k, Nonce::new(len as u64), b"ad", &sealed).unwrap(), pt);
    }

    #[test]
    fn chacha20_xor_is_involution(key in any::<[u8; 32]>(), counter in any::<u64>(),
                                  data in proptest::collection::vec(any::<u8>(), 0..10240)) {
        let k = SymmetricKey::from_bytes(key);
        let once = crypto::chacha20_xor(&k, Nonce::new(counter), &data);
        prop_assert_eq!(once.len(), data.len());
        prop_assert_eq!(crypto::chacha20_xor(&k, Nonce::new(counter), &once), data);
    }
}
