//! An ISP that throttles the OpenVPN-like fingerprint to 1% of the link,
//! and the same flow wrapped in a TLS stream layer.

use wglite::netsim::{run, Fingerprint, Layer, Scenario, TransportKind};

fn outer(s: &Scenario) -> String {
    match s.stack().outer_fingerprint() {
        Some(fp) => fp.to_string(),
        None => Fingerprint {
            kind: s.flows[0].transport,
            first_byte: s.flows[0].first_byte,
        }
        .to_string(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = Scenario::builtin("dpi").unwrap();
    let cap = base.downlink.bandwidth_kbps;

    let mut wrapped = base.clone();
    wrapped
        .layers
        .push(Layer::new("stunnel", TransportKind::Stream, 69, 0x17));
    let mut wg = base.clone();
    wg.flows[0].first_byte = 0x04;

    for (label, s) in [
        ("openvpn-like, bare", &base),
        ("openvpn-like in stunnel", &wrapped),
        ("wg-lite", &wg),
    ] {
        let r = run(s, 1)?;
        let f = &r.flows[&1];
        let kbps = f.throughput.map(|t| t.avg_kbps).unwrap_or(0.0);
        println!(
            "{label:<24} outer {:<14} {:>9.1} kbps ({:>5.1}% of link), {}/{} delivered",
            outer(s),
            kbps,
            100.0 * kbps / cap,
            f.delivered,
            f.sent
        );
    }
    Ok(())
}
