//! Four peers, no server. Each pair shares its own PSK; sending to a peer
//! without a session queues the packet and starts a handshake, and the
//! queue drains once the response arrives.

use std::collections::{BTreeMap, VecDeque};
use std::net::Ipv4Addr;

use wglite::crypto::{blake2s, SymmetricKey};
use wglite::tunnel::{ip, Emit, Inbound, Node, NodeConfig, Outgoing, PeerConfig, Rejection};
use wglite::Timestamp;

fn addr(id: u32) -> Ipv4Addr {
    Ipv4Addr::new(10, 9, 0, id as u8)
}

fn pair_key(a: u32, b: u32) -> SymmetricKey {
    let label = format!("mesh {}-{}", a.min(b), a.max(b));
    SymmetricKey::from_bytes(blake2s(label.as_bytes(), None))
}

fn main() {
    let ids = [1u32, 2, 3, 4];
    let mut nodes: BTreeMap<u32, Node> = BTreeMap::new();
    for &id in &ids {
        let mut n = Node::new(id, NodeConfig::default());
        for &other in ids.iter().filter(|&&o| o != id) {
            let prefix = format!("{}/32", addr(other)).parse().unwrap();
            n.add_peer(PeerConfig::new(other, pair_key(id, other)).allow(prefix))
                .unwrap();
        }
        nodes.insert(id, n);
    }

    // (from, datagram), delivered 1 ms after it was sent
    let mut wire: VecDeque<(u32, Outgoing)> = VecDeque::new();
    let mut now = Timestamp::from_millis(1);
    for &from in &ids {
        for &to in ids.iter().filter(|&&t| t != from) {
            let pkt = ip::build(
                addr(from),
                addr(to),
                ip::PROTO_UDP,
                format!("hello {to} from {from}").as_bytes(),
            );
            match nodes
                .get_mut(&from)
                .unwrap()
                .encrypt_outbound(&pkt, now)
                .unwrap()
            {
                Emit::Transport(o) => wire.push_back((from, o)),
                Emit::Queued {
                    handshake: Some(init),
                } => wire.push_back((from, init)),
                Emit::Queued { handshake: None } => {}
            }
        }
    }

    let mut delivered = 0;
    while let Some((from, out)) = wire.pop_front() {
        now = Timestamp(now.0 + 1_000_000);
        let node = nodes.get_mut(&out.peer_id).unwrap();
        match node.receive(&out.bytes, now) {
            Ok(Inbound::HandshakeAccepted { reply, flushed, .. }) => {
                println!("{} accepted init from {from}", out.peer_id);
                wire.push_back((out.peer_id, reply));
                wire.extend(flushed.into_iter().map(|f| (out.peer_id, f)));
            }
            Ok(Inbound::Established {
                setup_time,
                flushed,
                ..
            }) => {
                println!(
                    "{from} -> {} established in {setup_time:?}, {} queued packet(s) released",
                    out.peer_id,
                    flushed.len()
                );
                wire.extend(flushed.into_iter().map(|f| (from, f)));
            }
            Ok(Inbound::Packet { peer_id, packet }) => {
                delivered += 1;
                println!(
                    "{} got {:?} from {peer_id}",
                    out.peer_id,
                    String::from_utf8_lossy(&packet[ip::HEADER_LEN..])
                );
            }
            Ok(Inbound::Keepalive { .. }) => {}
            Err(Rejection::SimultaneousInitiation) => {
                println!(
                    "{} and {from} initiated at once; {} keeps its own handshake",
                    out.peer_id, out.peer_id
                )
            }
            Err(e) => println!("{} rejected a frame from {from}: {e:?}", out.peer_id),
        }
    }
    println!(
        "{delivered} of {} packets delivered",
        ids.len() * (ids.len() - 1)
    );
}
