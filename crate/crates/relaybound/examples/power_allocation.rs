//! When sources do coordinate, the boundary-optimal transmit powers for a
//! fixed relay come in closed form. This compares them against a brute
//! grid search over the power square, for a general relay and for a
//! neutralizing one.
//!
//!     cargo run --example power_allocation

use relaybound::channel::{draw_channel, relay_power, RelayMatrix};
use relaybound::neutralization::{check_in_feasibility, minimal_in_relay};
use relaybound::power::{brute_force_power, optimal_power_general, optimal_power_in};
use relaybound::{C64, CMat, RVec};

fn main() {
    let ch = draw_channel(2, 2, 11);
    let p_s_max = 10.0;
    let p_r_max = 30.0;
    let target = 1.5; // user 2's guaranteed SINR

    // Any fixed relay works for the general form; take a small rotation.
    let r = RelayMatrix::new(CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.3, 0.2),
            C64::new(-0.1, 0.4),
            C64::new(0.2, -0.3),
            C64::new(0.4, 0.1),
        ],
    ));

    let sol = optimal_power_general(&ch, &r, &[target], p_s_max, p_r_max).unwrap();
    let oracle = brute_force_power(&ch, &r, &[target], p_s_max, p_r_max, 300).unwrap();
    println!("general relay, target SINR_2 = {target}:");
    println!("  closed form: p = ({:.4}, {:.4}), SINR_1 = {:.6}", sol.p[0], sol.p[1], sol.sinr_1);
    println!("  300x300 grid: p = ({:.4}, {:.4}), SINR_1 = {:.6}", oracle.p[0], oracle.p[1], oracle.sinr_1);
    println!("  p_1 was pinned by: {:?}", sol.p1_cap);
    println!("  relay power {:.4} of {p_r_max} (active: {})",
        relay_power(&ch, &RVec::from_vec(vec![sol.p[0], sol.p[1]]), &r),
        sol.relay_power_active,
    );

    // Neutralizing relay: users decouple, each peer's power follows from
    // its own target, user 1 soaks up the leftover relay budget.
    let probe = RVec::from_element(2, p_s_max);
    let report = check_in_feasibility(&ch, &probe, f64::INFINITY).unwrap();
    let (_, rn) = minimal_in_relay(&report, &ch).unwrap();
    let p_r_in = 2.0 * report.min_power;
    let sol = optimal_power_in(&ch, &rn, &[target], p_s_max, p_r_in).unwrap();
    let oracle = brute_force_power(&ch, &rn, &[target], p_s_max, p_r_in, 300).unwrap();
    println!("\nneutralizing relay, budget {:.4}:", p_r_in);
    println!("  closed form: p = ({:.4}, {:.4}), SINR_1 = {:.6}", sol.p[0], sol.p[1], sol.sinr_1);
    println!("  300x300 grid: p = ({:.4}, {:.4}), SINR_1 = {:.6}", oracle.p[0], oracle.p[1], oracle.sinr_1);
    println!("  relay budget active: {}", sol.relay_power_active);
}
