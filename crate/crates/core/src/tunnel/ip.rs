//! Minimal IPv4 header handling for inner packets.

use std::net::Ipv4Addr;

pub const HEADER_LEN: usize = 20;
pub const PROTO_UDP: u8 = 17;
pub const PROTO_ICMP: u8 = 1;

fn checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header
        .chunks(2)
        .map(|c| u32::from(u16::from_be_bytes([c[0], *c.get(1).unwrap_or(&0)])))
        .sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Builds an IPv4 packet with a 20-byte header and `payload`.
pub fn build(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8, payload: &[u8]) -> Vec<u8> {
    let total = u16::try_from(HEADER_LEN + payload.len()).expect("IPv4 packet too large");
    let mut p = vec![0u8; HEADER_LEN];
    p[0] = 0x45;
    p[2..4].copy_from_slice(&total.to_be_bytes());
    p[8] = 64;
    p[9] = protocol;
    p[12..16].copy_from_slice(&src.octets());
    p[16..20].copy_from_slice(&dst.octets());
    let c = checksum(&p);
    p[10..12].copy_from_slice(&c.to_be_bytes());
    p.extend_from_slice(payload);
    p
}

/// A packet large enough to hold an IPv4 header with version 4.
pub fn is_ipv4(packet: &[u8]) -> bool {
    packet.len() >= HEADER_LEN && packet[0] >> 4 == 4
}

pub fn source(packet: &[u8]) -> Option<Ipv4Addr> {
    is_ipv4(packet).then(|| Ipv4Addr::new(packet[12], packet[13], packet[14], packet[15]))
}

pub fn destination(packet: &[u8]) -> Option<Ipv4Addr> {
    is_ipv4(packet).then(|| Ipv4Addr::new(packet[16], packet[17], packet[18], packet[19]))
}
