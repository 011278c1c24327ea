//! Captures a short session and replays it into the responder: stale
//! handshake stamps and reused counters are refused and counted.

use std::net::Ipv4Addr;

use wglite::crypto::SymmetricKey;
use wglite::tunnel::{ip, Emit, Node, NodeConfig, PeerConfig, ReplayWindow};
use wglite::Timestamp;

fn main() {
    let psk = SymmetricKey::from_bytes([3; 32]);
    let (a_ip, b_ip) = (Ipv4Addr::new(10, 0, 0, 1), Ipv4Addr::new(10, 0, 0, 2));
    let mut a = Node::new(1, NodeConfig::default());
    let mut b = Node::new(2, NodeConfig::default());
    a.add_peer(PeerConfig::new(2, psk.clone()).allow(format!("{b_ip}/32").parse().unwrap()))
        .unwrap();
    b.add_peer(PeerConfig::new(1, psk).allow(format!("{a_ip}/32").parse().unwrap()))
        .unwrap();

    let mut capture = Vec::new();
    let init = a
        .create_handshake_init(2, Timestamp::from_millis(1))
        .unwrap();
    capture.push(init.bytes.clone());
    let reply = match b.receive(&init.bytes, Timestamp::from_millis(2)).unwrap() {
        wglite::tunnel::Inbound::HandshakeAccepted { reply, .. } => reply,
        other => panic!("{other:?}"),
    };
    a.receive(&reply.bytes, Timestamp::from_millis(3)).unwrap();
    for i in 0..50u8 {
        let pkt = ip::build(a_ip, b_ip, ip::PROTO_UDP, &[i]);
        let Emit::Transport(o) = a
            .encrypt_outbound(&pkt, Timestamp::from_millis(10))
            .unwrap()
        else {
            unreachable!()
        };
        b.receive(&o.bytes, Timestamp::from_millis(11)).unwrap();
        capture.push(o.bytes);
    }

    let accepted = capture
        .iter()
        .rev()
        .filter(|f| b.receive(f, Timestamp::from_secs(1)).is_ok())
        .count();
    println!("replayed {} frames, {accepted} accepted", capture.len());
    for (reason, n) in b.rejections() {
        println!("  {reason:?}: {n}");
    }

    // the window itself: each counter once, nothing too far behind
    let mut w = ReplayWindow::new();
    for c in [5u64, 3, 5, 4000, 3, 3999] {
        println!(
            "counter {c:>4}: {}",
            if w.check_and_commit(c) {
                "accept"
            } else {
                "reject"
            }
        );
    }
}
