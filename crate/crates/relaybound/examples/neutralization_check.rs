//! Interference neutralization in three acts: how much relay power exact
//! cancellation costs on a random channel, the relay matrix that does it,
//! and the budget at which the answer flips from no to yes.
//!
//!     cargo run --example neutralization_check

use relaybound::channel::{draw_channel, relay_power, sinr, sinr_in};
use relaybound::neutralization::{check_in_feasibility, minimal_in_relay};
use relaybound::RVec;

fn main() {
    let ch = draw_channel(2, 2, 21);
    let p = RVec::from_vec(vec![10.0, 10.0]);

    // The minimum power needed is a closed form in the channel and powers;
    // pass an infinite budget to read it off without a verdict in the way.
    let report = check_in_feasibility(&ch, &p, f64::INFINITY).unwrap();
    println!("minimum relay power for exact cancellation: {:.4}", report.min_power);
    println!("free directions left after cancelling: {}", report.basis_xn.ncols());

    let (_, relay) = minimal_in_relay(&report, &ch).unwrap();
    println!("\nminimal neutralizing relay:");
    for i in 0..2 {
        println!(
            "  [{:>7.3} {:+.3}i   {:>7.3} {:+.3}i]",
            relay.r[(i, 0)].re,
            relay.r[(i, 0)].im,
            relay.r[(i, 1)].re,
            relay.r[(i, 1)].im
        );
    }
    println!("cross-link residual: {:.2e}", ch.in_residual(&relay));
    println!("its relay power:     {:.4} (matches the closed form)", relay_power(&ch, &p, &relay));

    // With interference gone the two users decouple: the neutralized SINR
    // formula agrees with the full one.
    for j in 0..2 {
        let full = sinr(&ch, &p, &relay, j);
        let decoupled = sinr_in(&ch, &p, &relay, j).unwrap();
        println!("user {}: SINR {:.4} (decoupled formula {:.4})", j + 1, full, decoupled);
    }

    println!("\nverdict vs budget:");
    for budget in [5.0, 10.0, 20.0, 40.0, 80.0] {
        let rep = check_in_feasibility(&ch, &p, budget).unwrap();
        println!(
            "  P_r = {:>5.1}  ->  {}",
            budget,
            if rep.feasible { "feasible" } else { "infeasible" }
        );
    }
}
