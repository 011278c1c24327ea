//! wg-lite nested inside OpenVPN-over-TCP and stunnel. With the usual 1420
//! tunnel MTU every full packet needs two carrier segments; sizing the
//! tunnel to the carrier avoids that.

use wglite::baseline::preset;
use wglite::benchmark::run_trial;
use wglite::netsim::{fragment, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = Scenario::builtin("default").unwrap();
    s.workload.transfer_bytes = 1_000_000;
    let stack = s.stack();
    let mtu = s.downlink.mtu;
    println!("link MTU {mtu}");
    for (layer, cap) in stack.layers.iter().zip(stack.capacities(mtu)) {
        println!("  inside {:<12} room for {:?} bytes", layer.name, cap);
    }
    let cap = stack.payload_capacity(mtu).ok_or("stack leaves no room")?;

    let wg = preset("wireguard_like")?;
    for inner in [1420, cap - wg.header_overhead] {
        let wire = inner + wg.header_overhead;
        let pieces = fragment(&vec![0; wire], mtu, stack.total_overhead(), 1)?.len();
        let mut sc = s.clone();
        sc.inner_mtu = Some(inner);
        let o = run_trial(&wg, &sc, &sc.workload, 5, 1)?;
        println!(
            "inner MTU {inner}: {wire}-byte datagrams, {pieces} segment(s) each, avg download {:.0} kbps",
            o.record.avg_dl_kbps
        );
    }
    Ok(())
}
