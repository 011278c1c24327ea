//! A receive-only peer answers with passive keepalives, then renegotiates
//! once the session has been silent for the renegotiate timeout.

use std::net::Ipv4Addr;
use std::time::Duration;

use wglite::crypto::SymmetricKey;
use wglite::tunnel::{ip, Emit, Inbound, Node, NodeConfig, PeerConfig, TickAction};
use wglite::Timestamp;

fn main() {
    let psk = SymmetricKey::from_bytes([7; 32]);
    let (a_ip, b_ip) = (Ipv4Addr::new(10, 0, 0, 1), Ipv4Addr::new(10, 0, 0, 2));
    let mut a = Node::new(1, NodeConfig::default());
    let mut b = Node::new(2, NodeConfig::default());
    a.add_peer(PeerConfig::new(2, psk.clone()).allow(format!("{b_ip}/32").parse().unwrap()))
        .unwrap();
    b.add_peer(
        PeerConfig::new(1, psk)
            .allow(format!("{a_ip}/32").parse().unwrap())
            .with_keepalive(Some(Duration::from_secs(10)))
            .with_renegotiate_timeout(Duration::from_secs(60)),
    )
    .unwrap();

    let init = a.create_handshake_init(2, Timestamp::ZERO).unwrap();
    let Ok(Inbound::HandshakeAccepted { reply, .. }) = b.receive(&init.bytes, Timestamp::ZERO)
    else {
        unreachable!()
    };
    a.receive(&reply.bytes, Timestamp::ZERO).unwrap();

    // a streams one packet every 2 s for 30 s; b never has anything to send
    for s in 0..=120u64 {
        let now = Timestamp::from_secs(s);
        if s < 30 && s % 2 == 0 {
            let pkt = ip::build(a_ip, b_ip, ip::PROTO_UDP, b"tick");
            if let Emit::Transport(o) = a.encrypt_outbound(&pkt, now).unwrap() {
                b.receive(&o.bytes, now).unwrap();
            }
        }
        for act in b.tick(now) {
            match act {
                TickAction::Keepalive(o) => {
                    println!("t={s:>3}s keepalive ({} bytes)", o.bytes.len())
                }
                TickAction::Renegotiate(_) => {
                    println!("t={s:>3}s silent too long: session dropped, new handshake init")
                }
                TickAction::Retransmit(_) => println!("t={s:>3}s handshake init retransmitted"),
                TickAction::GaveUp { .. } => println!("t={s:>3}s gave up"),
            }
        }
    }
}
