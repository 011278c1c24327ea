//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any failed.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::net::Ipv4Addr;
use std::path::Path;
use std::time::{Duration, Instant};

use chacha20::cipher::{KeyIvInit, StreamCipher, StreamCipherSeek};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wglite::baseline::preset;
use wglite::benchmark::run_trial;
use wglite::cli::main_with;
use wglite::crypto::vectors::known_answers;
use wglite::netsim::{run, Layer, Scenario, TraceKind, TransportKind};
use wglite::tunnel::wire::HandshakeInit;
use wglite::tunnel::{
    ip, Emit, Inbound, Ipv4Prefix, Node, NodeConfig, PeerConfig, Rejection, TickAction, WireMessage,
};
use wglite::Timestamp;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with(
        std::iter::once("wglite").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

fn read_csv(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|row| {
            header
                .iter()
                .cloned()
                .zip(row.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

// Per-protocol means, columns in table order:
// connection, avg dl, peak dl, avg ul, peak ul, avg latency, min latency, jitter.
const PUBLISHED_MEANS: [(&str, [f64; 8]); 3] = [
    (
        "wireguard",
        [177.0, 17002.2, 24970.6, 1967.8, 2549.2, 239.6, 231.0, 39.6],
    ),
    (
        "openconnect",
        [
            21000.0, 21491.0, 28577.0, 1787.0, 2202.6, 237.0, 219.2, 75.0,
        ],
    ),
    (
        "openvpn",
        [8500.0, 21911.4, 30802.8, 2007.2, 2603.8, 262.2, 225.8, 88.2],
    ),
];
const TABLE_COLUMNS: [&str; 8] = [
    "connection_time_ms",
    "avg_dl_kbps",
    "peak_dl_kbps",
    "avg_ul_kbps",
    "peak_ul_kbps",
    "avg_latency_ms",
    "min_latency_ms",
    "jitter_ms",
];

fn table_reproduction() -> Check {
    let start = Instant::now();
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference_trials.csv");
    let (code, out, err) = cli(&["bench", "aggregate", fixture, "--format", "csv"]);
    ensure(code == 0, || format!("exit {code}: {err}"))?;
    let rows = read_csv(&out);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (protocol, means) in PUBLISHED_MEANS {
        let row = rows
            .iter()
            .find(|r| r["protocol"] == protocol)
            .ok_or(format!("no row for {protocol}"))?;
        for (col, want) in TABLE_COLUMNS.iter().zip(means) {
            let got: f64 = row[*col]
                .parse()
                .map_err(|e| format!("{protocol}.{col}: {e}"))?;
            let d = (got - want).abs();
            worst = worst.max(d);
            ensure(d <= 0.05, || {
                format!("{protocol}.{col} = {got}, want {want}")
            })?;
            checked += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "{checked} means, max |diff| {worst:.3}, {:?}",
        start.elapsed()
    ))
}

fn oracle_output(primitive: &str, inputs: &BTreeMap<&str, Vec<u8>>) -> Option<Vec<u8>> {
    let key = inputs.get("key");
    match primitive {
        "chacha20" if inputs.contains_key("plaintext") => {
            let mut data = inputs["plaintext"].clone();
            let mut c =
                chacha20::ChaCha20::new(key?.as_slice().into(), inputs["nonce"].as_slice().into());
            c.seek(64 * u64::from(inputs["counter"][0]));
            c.apply_keystream(&mut data);
            Some(data)
        }
        "chacha20" => {
            let mut data = vec![0u8; 64];
            let mut c =
                chacha20::ChaCha20::new(key?.as_slice().into(), inputs["nonce"].as_slice().into());
            c.seek(64 * u64::from(inputs["counter"][0]));
            c.apply_keystream(&mut data);
            Some(data)
        }
        "poly1305" => {
            let k: [u8; 32] = key?.as_slice().try_into().ok()?;
            Some(
                poly1305::Poly1305::new((&k).into())
                    .compute_unpadded(&inputs["message"])
                    .to_vec(),
            )
        }
        "aead" if inputs.contains_key("nonce") => {
            let cipher = chacha20poly1305::ChaCha20Poly1305::new(key?.as_slice().into());
            let payload = Payload {
                msg: &inputs["plaintext"],
                aad: &inputs["aad"],
            };
            cipher
                .encrypt(inputs["nonce"].as_slice().into(), payload)
                .ok()
        }
        "blake2s" => {
            use blake2::digest::{FixedOutput, Update};
            match key {
                None => {
                    let mut h = <blake2::Blake2s256 as blake2::digest::Digest>::new();
                    blake2::digest::Digest::update(&mut h, &inputs["data"]);
                    Some(blake2::digest::Digest::finalize(h).to_vec())
                }
                Some(k) => {
                    let mut mac =
                        <blake2::Blake2sMac256 as blake2::digest::KeyInit>::new_from_slice(k)
                            .ok()?;
                    mac.update(&inputs["data"]);
                    Some(mac.finalize_fixed().to_vec())
                }
            }
        }
        _ => None,
    }
}

fn crypto_vectors() -> Check {
    let start = Instant::now();
    let (code, _, err) = cli(&["vectors", "--format", "csv"]);
    ensure(code == 0, || format!("vectors exit {code}: {err}"))?;
    let results = known_answers();
    let mut cross = 0;
    for r in &results {
        ensure(r.passed(), || {
            format!("{}/{} computed {}", r.primitive, r.name, r.computed)
        })?;
        let inputs: BTreeMap<&str, Vec<u8>> = r
            .inputs
            .iter()
            .map(|(k, v)| {
                let bytes = if *k == "counter" {
                    vec![v.parse::<u8>().unwrap_or(0)]
                } else {
                    hex::decode(v).unwrap_or_default()
                };
                (*k, bytes)
            })
            .collect();
        if let Some(theirs) = oracle_output(r.primitive, &inputs) {
            ensure(hex::encode(&theirs) == r.expected, || {
                format!("oracle disagrees on {}/{}", r.primitive, r.name)
            })?;
            cross += 1;
        }
    }
    for p in ["chacha20", "poly1305", "aead", "blake2s"] {
        ensure(results.iter().any(|r| r.primitive == p), || {
            format!("no {p} vectors")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "{} vectors, {cross} re-derived by oracle, {:?}",
        results.len(),
        start.elapsed()
    ))
}

fn anti_replay() -> Check {
    let start = Instant::now();
    // record a session: one handshake and 1000 transport frames a -> b
    let (mut a, mut b) = pair();
    let init = a
        .create_handshake_init(B, Timestamp::from_millis(1))
        .unwrap();
    let Ok(Inbound::HandshakeAccepted { reply, .. }) =
        b.receive(&init.bytes, Timestamp::from_millis(2))
    else {
        return Err("init not accepted".into());
    };
    a.receive(&reply.bytes, Timestamp::from_millis(3))
        .map_err(|e| format!("{e:?}"))?;
    let mut capture = vec![(init.bytes.clone(), Timestamp::from_millis(2))];
    for i in 0..1000u64 {
        let t = Timestamp::from_millis(10 + i);
        let Emit::Transport(o) = a
            .encrypt_outbound(&packet(A, B, &i.to_le_bytes()), t)
            .unwrap()
        else {
            return Err("no transport frame".into());
        };
        capture.push((o.bytes, t));
    }

    let (_, mut fresh) = pair();
    let mut first_pass = 0;
    for (bytes, t) in &capture {
        if fresh.receive(bytes, *t).is_ok() {
            first_pass += 1;
        }
    }
    let mut replays = capture.clone();
    replays.reverse();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut shuffled = capture.clone();
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    replays.extend(capture.iter().cloned());
    replays.extend(shuffled);
    let late = Timestamp::from_secs(5);
    let duplicates = replays
        .iter()
        .filter(|(bytes, _)| fresh.receive(bytes, late).is_ok())
        .count();
    ensure(first_pass == capture.len(), || {
        format!(
            "only {first_pass}/{} first deliveries accepted",
            capture.len()
        )
    })?;
    ensure(duplicates == 0, || {
        format!("{duplicates} duplicate acceptances")
    })?;

    // non-increasing init timestamps
    let mut rejected = 0;
    let mut offered = 0;
    let (_, mut responder) = pair();
    let mut greatest = 0u64;
    for _ in 0..2000 {
        let stamp = if greatest > 0 && rng.random_bool(0.5) {
            rng.random_range(0..=greatest)
        } else {
            greatest + rng.random_range(1..1000)
        };
        let msg =
            WireMessage::HandshakeInit(HandshakeInit::signed(A, Timestamp(stamp), &psk())).encode();
        let res = responder.receive(&msg, Timestamp(stamp));
        if stamp <= greatest {
            offered += 1;
            if res == Err(Rejection::ReplayedTimestamp) {
                rejected += 1;
            }
        } else {
            ensure(res.is_ok(), || {
                format!("fresh stamp {stamp} refused: {res:?}")
            })?;
            greatest = stamp;
        }
    }
    ensure(offered > 0 && rejected == offered, || {
        format!("{rejected}/{offered} stale inits rejected")
    })?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "{} frames replayed {}x, 0 duplicates; {rejected}/{offered} stale inits rejected, {:?}",
        capture.len(),
        replays.len() / capture.len(),
        start.elapsed()
    ))
}

fn cryptokey_routing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases = 0;
    let mut dropped = 0;
    while cases < 1000 {
        let prefixes: Vec<Ipv4Prefix> = (0..rng.random_range(1..6))
            .map(|_| {
                Ipv4Prefix::new(
                    Ipv4Addr::from(rng.random::<u32>()),
                    rng.random_range(2..=32),
                )
                .unwrap()
            })
            .collect();
        let outside = (0..64)
            .map(|_| Ipv4Addr::from(rng.random::<u32>()))
            .find(|x| !prefixes.iter().any(|p| p.contains(*x)));
        let Some(outside) = outside else { continue };
        let mut a = Node::new(A, NodeConfig::default());
        let mut b = Node::new(B, NodeConfig::default());
        a.add_peer(PeerConfig::new(B, psk()).allow(format!("{}/32", addr_of(B)).parse().unwrap()))
            .unwrap();
        let mut peer = PeerConfig::new(A, psk());
        for p in &prefixes {
            peer = peer.allow(*p);
        }
        b.add_peer(peer).unwrap();
        establish(&mut a, &mut b, Timestamp::from_millis(1), 1_000_000);

        let spoofed = ip::build(outside, addr_of(B), ip::PROTO_UDP, b"x");
        let Emit::Transport(o) = a
            .encrypt_outbound(&spoofed, Timestamp::from_millis(5))
            .unwrap()
        else {
            return Err("no session".into());
        };
        let res = b.receive(&o.bytes, Timestamp::from_millis(6));
        ensure(res == Err(Rejection::SourceOutsideAllowedIps), || {
            format!("{outside} vs {prefixes:?}: {res:?}")
        })?;
        dropped += 1;

        // control: a source inside the table passes
        let inside = prefixes[0].network();
        let ok = ip::build(inside, addr_of(B), ip::PROTO_UDP, b"y");
        let Emit::Transport(o) = a.encrypt_outbound(&ok, Timestamp::from_millis(7)).unwrap() else {
            unreachable!()
        };
        ensure(
            matches!(
                b.receive(&o.bytes, Timestamp::from_millis(8)),
                Ok(Inbound::Packet { .. })
            ),
            || format!("{inside} inside {prefixes:?} was dropped"),
        )?;
        ensure(
            b.rejection_count(Rejection::SourceOutsideAllowedIps) == 1,
            || "diagnostic not counted".into(),
        )?;
        cases += 1;
    }
    Ok(format!(
        "{dropped}/{cases} outside-prefix packets dropped with source-outside-allowed-ips"
    ))
}

fn keepalive_schedule() -> Check {
    let (mut a, mut b) = pair();
    establish(&mut a, &mut b, Timestamp::ZERO, 0);
    let step = Duration::from_millis(100);
    let mut keepalives = Vec::new();
    let mut renegotiations = Vec::new();
    let mut t = Duration::ZERO;
    // b only receives: one packet a second for 100 s, then silence
    while t <= Duration::from_secs(229) {
        let now = Timestamp(t.as_nanos() as u64);
        if t < Duration::from_secs(100) && t.subsec_nanos() == 0 {
            let Emit::Transport(o) = a.encrypt_outbound(&packet(A, B, b"rx"), now).unwrap() else {
                unreachable!()
            };
            b.receive(&o.bytes, now).map_err(|e| format!("{e:?}"))?;
        }
        for act in b.tick(now) {
            match act {
                TickAction::Keepalive(_) => keepalives.push(t.as_secs_f64()),
                TickAction::Renegotiate(o) => {
                    ensure(
                        matches!(
                            WireMessage::decode(&o.bytes),
                            Ok(WireMessage::HandshakeInit(_))
                        ),
                        || "renegotiation is not a HandshakeInit".into(),
                    )?;
                    renegotiations.push(t.as_secs_f64());
                }
                other => return Err(format!("unexpected {other:?} at {t:?}")),
            }
        }
        t += step;
    }
    // while receiving, one keepalive every 15 s; the last one answers the
    // final packet; renegotiation follows 120 s after the last send
    let want = [15.0, 30.0, 45.0, 60.0, 75.0, 90.0, 105.0];
    ensure(keepalives == want, || {
        format!("keepalives at {keepalives:?}")
    })?;
    ensure(renegotiations == [225.0], || {
        format!("renegotiations at {renegotiations:?}")
    })?;
    ensure(b.session(A).is_none(), || "stale session kept".into())?;
    Ok(format!(
        "keepalives at {keepalives:?} s, one HandshakeInit at {} s",
        renegotiations[0]
    ))
}

fn dpi_scenario() -> Check {
    let start = Instant::now();
    let s = Scenario::builtin("dpi").unwrap();
    let cap = s.downlink.bandwidth_kbps;
    let rate =
        |r: &wglite::netsim::RunReport| r.flows[&1].throughput.map(|t| t.avg_kbps).unwrap_or(0.0);

    let plain = run(&s, 1).map_err(|e| e.to_string())?;
    let plain_share = rate(&plain) / cap;
    ensure(plain_share <= 0.01, || {
        format!("unwrapped share {plain_share:.4}")
    })?;

    let mut wrapped = s.clone();
    wrapped
        .layers
        .push(Layer::new("stunnel", TransportKind::Stream, 69, 0x17));
    let wrapped_share = rate(&run(&wrapped, 1).map_err(|e| e.to_string())?) / cap;
    ensure(wrapped_share >= 0.9, || {
        format!("wrapped share {wrapped_share:.4}")
    })?;

    let mut wg = s.clone();
    wg.flows[0].first_byte = 0x04;
    let with_policy = run(&wg, 1).map_err(|e| e.to_string())?;
    wg.dpi.clear();
    let without = run(&wg, 1).map_err(|e| e.to_string())?;
    ensure(with_policy.trace == without.trace, || {
        "wg-lite flow trace changed under the policy".into()
    })?;
    let wg_share = rate(&with_policy) / cap;
    ensure(wg_share >= 0.9, || format!("wg-lite share {wg_share:.4}"))?;

    // the same holds for a whole wg-lite benchmark trial
    let mut bench = Scenario::builtin("dpi").unwrap();
    bench.flows.clear();
    bench.workload.ping_count = 5;
    bench.workload.transfer_bytes = 500_000;
    let p = preset("wireguard_like").unwrap();
    let shaped = run_trial(&p, &bench, &bench.workload, 1, 1).map_err(|e| e.to_string())?;
    bench.dpi.clear();
    let free = run_trial(&p, &bench, &bench.workload, 1, 1).map_err(|e| e.to_string())?;
    ensure(shaped.record == free.record, || {
        "wg-lite trial changed under the policy".into()
    })?;

    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "unwrapped {:.2}% of capacity, wrapped {:.1}%, wg-lite {:.1}% and unaffected, {:?}",
        plain_share * 100.0,
        wrapped_share * 100.0,
        wg_share * 100.0,
        start.elapsed()
    ))
}

fn mtu_mismatch() -> Check {
    let mut s = Scenario::builtin("default").unwrap();
    s.workload.ping_count = 5;
    s.workload.transfer_bytes = 1_000_000;
    let p = preset("wireguard_like").unwrap();
    let cap = s
        .stack()
        .payload_capacity(s.downlink.mtu)
        .ok_or("no capacity")?;
    let matched_mtu = cap - p.header_overhead;

    let mut mismatched = s.clone();
    mismatched.inner_mtu = Some(1420);
    let mut matched = s.clone();
    matched.inner_mtu = Some(matched_mtu);
    ensure(1420 + p.header_overhead > cap, || {
        "1420 fits the carrier".into()
    })?;

    let over =
        run_trial(&p, &mismatched, &mismatched.workload, 21, 1).map_err(|e| e.to_string())?;
    let fit = run_trial(&p, &matched, &matched.workload, 21, 1).map_err(|e| e.to_string())?;
    ensure(over.record.avg_dl_kbps < fit.record.avg_dl_kbps, || {
        format!(
            "mismatched {} >= matched {}",
            over.record.avg_dl_kbps, fit.record.avg_dl_kbps
        )
    })?;

    let mut sends = 0;
    let mut split = 0;
    for (trace, mtu) in [(&over.trace, 1420), (&fit.trace, matched_mtu)] {
        for (send, n) in trace.fragments_per_send() {
            let want = send.bytes.div_ceil(cap).max(1);
            ensure(n == want, || {
                format!(
                    "send of {} bytes made {n} fragments, want {want}",
                    send.bytes
                )
            })?;
            sends += 1;
            if n > 1 {
                split += 1;
                ensure(mtu == 1420, || "matched configuration fragmented".into())?;
            }
        }
    }
    ensure(split > 0, || "mismatch never fragmented".into())?;
    ensure(over.trace.count(TraceKind::Frag) > 0, || {
        "no frag events".into()
    })?;
    Ok(format!(
        "avg_download {:.1} < {:.1} kbps (inner MTU 1420 vs {matched_mtu}, capacity {cap}); {sends} sends match the ceiling, {split} split",
        over.record.avg_dl_kbps, fit.record.avg_dl_kbps
    ))
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn ordering(summary: &str) -> Check {
    let rows = read_csv(summary);
    let get = |name: &str, col: &str| -> Result<f64, String> {
        let row = rows
            .iter()
            .find(|r| r["protocol"] == name)
            .ok_or(format!("no {name}"))?;
        row[col].parse::<f64>().map_err(|e| e.to_string())
    };
    let ct = |n| get(n, "connection_time_ms");
    let j = |n| get(n, "jitter_ms");
    let (wg, ov, oc) = (
        ct("wireguard_like")?,
        ct("openvpn_like")?,
        ct("openconnect_like")?,
    );
    ensure(wg < ov && ov < oc, || {
        format!("connection_time {wg} / {ov} / {oc}")
    })?;
    let (jw, jv, jc) = (
        j("wireguard_like")?,
        j("openvpn_like")?,
        j("openconnect_like")?,
    );
    ensure(jw < jv && jw < jc, || format!("jitter {jw} / {jv} / {jc}"))?;
    Ok(format!("connection_time {wg} < {ov} < {oc} ms; jitter wg {jw} lowest (openvpn {jv}, openconnect {jc})"))
}

fn bench_runs() -> (Check, Check) {
    let tmp = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for name in ["first", "second"] {
        let out = tmp.path().join(name);
        let (code, _, err) = cli(&[
            "bench",
            "run",
            "--scenario",
            "default",
            "--presets",
            "all",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        if code != 0 {
            let e: Check = Err(format!("bench run exit {code}: {err}"));
            return (e.clone(), e);
        }
        outs.push(out);
    }
    let summary = fs::read_to_string(outs[0].join("summary.csv")).unwrap();
    let (a, b) = (tree(&outs[0]), tree(&outs[1]));
    let traces = a.iter().filter(|(n, _)| n.ends_with(".tsv")).count();
    let bytes: usize = a.iter().map(|(_, v)| v.len()).sum();
    let det = if a == b && traces > 0 {
        Ok(format!(
            "{} files ({traces} traces, {bytes} bytes) byte-identical across two runs",
            a.len()
        ))
    } else {
        let differing: Vec<&str> = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.as_str())
            .collect();
        Err(format!("outputs differ: {differing:?}"))
    };
    (ordering(&summary), det)
}

fn main() {
    let (ord, det) = bench_runs();
    let results: Vec<(&str, Check)> = vec![
        (
            "published means from the reference trials",
            table_reproduction(),
        ),
        ("crypto known-answer suite", crypto_vectors()),
        ("anti-replay", anti_replay()),
        ("cryptokey routing", cryptokey_routing()),
        ("keepalive and renegotiation", keepalive_schedule()),
        ("DPI throttle and wrapping", dpi_scenario()),
        ("MTU mismatch degradation", mtu_mismatch()),
        ("setup-time and jitter ordering", ord),
        ("determinism", det),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
