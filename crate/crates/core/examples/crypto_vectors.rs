//! Runs the known-answer suite and a seal/open round trip with the
//! counter nonce used by transport frames.

use wglite::crypto::{aead_open, aead_seal, blake2s, vectors::known_answers, Nonce, SymmetricKey};

fn main() {
    let results = known_answers();
    for r in &results {
        println!(
            "{:<9} {:<26} {}",
            r.primitive,
            r.name,
            if r.passed() { "ok" } else { "MISMATCH" }
        );
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    println!("{} vectors, {failed} mismatched\n", results.len());

    let key = SymmetricKey::from_bytes(blake2s(b"example psk", None));
    let header = [4, 0, 0, 0, 1, 2, 3, 4];
    let sealed = aead_seal(&key, Nonce::new(42), &header, b"inner packet");
    println!(
        "sealed {} bytes into {} ({})",
        12,
        sealed.len(),
        hex::encode(&sealed)
    );
    let opened = aead_open(&key, Nonce::new(42), &header, &sealed).expect("authentic");
    println!("opened: {:?}", String::from_utf8_lossy(&opened));

    let mut forged = sealed.clone();
    forged[0] ^= 1;
    println!(
        "flipped bit rejected: {}",
        aead_open(&key, Nonce::new(42), &header, &forged).is_err()
    );
    println!(
        "wrong counter rejected: {}",
        aead_open(&key, Nonce::new(43), &header, &sealed).is_err()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
