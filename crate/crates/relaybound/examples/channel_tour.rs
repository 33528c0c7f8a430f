//! Draw a channel, switch a relay on, and watch every physical quantity:
//! effective gains, SINRs, rates, and the relay's transmit power.
//!
//!     cargo run --example channel_tour

use relaybound::channel::{
    draw_channel, rate, relay_power, sinr, ChannelRealization, RelayMatrix,
};
use relaybound::{C64, CMat, RVec};

fn main() {
    let ch = draw_channel(2, 2, 7);
    println!("channel seed 7, K = {}, M = {}", ch.k, ch.m);
    println!("direct gains |h_jl|:");
    for j in 0..ch.k {
        let row: Vec<String> =
            (0..ch.k).map(|l| format!("{:.3}", ch.h[(j, l)].norm())).collect();
        println!("  D{}: {}", j + 1, row.join("  "));
    }

    let p = RVec::from_vec(vec![10.0, 10.0]);
    let off = RelayMatrix::zero(2);
    // A mild identity-ish relay: forwards everything it hears, scaled down.
    let on = RelayMatrix::new(CMat::identity(2, 2) * C64::new(0.4, 0.1));

    println!("\nsource powers {:?} (noise-normalized)", p.as_slice());
    println!("{:<12} {:>10} {:>10} {:>12}", "", "SINR_1", "SINR_2", "relay power");
    for (name, r) in [("relay off", &off), ("relay on", &on)] {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>12.4}",
            name,
            sinr(&ch, &p, r, 0),
            sinr(&ch, &p, r, 1),
            relay_power(&ch, &p, r)
        );
    }

    let rates: Vec<f64> = (0..2).map(|j| rate(sinr(&ch, &p, &on, j))).collect();
    println!("\nrates with relay on: {:.4} and {:.4} bits/use", rates[0], rates[1]);

    // Channels round-trip through JSON, so every experiment is replayable.
    let text = serde_json::to_string(&ch).unwrap();
    let back: ChannelRealization = serde_json::from_str(&text).unwrap();
    assert_eq!(back, ch);
    println!("JSON round trip: {} bytes, bit-exact", text.len());
}
