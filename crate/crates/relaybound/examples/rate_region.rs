//! Sweep the full rate-region boundary of one channel under all three
//! systems: relay off, general relay, and neutralizing relay. Prints the
//! boundary table and where the relay-off equilibrium sits inside it.
//!
//!     cargo run --example rate_region

use relaybound::channel::{draw_channel, PowerBudget};
use relaybound::pareto::{
    ic_baseline_region, max_sum_rate, nash_equilibrium_rates, proportional_fairness,
    sweep_boundary, SweepOptions,
};
use relaybound::qcqp::QcqpKind;

fn main() {
    let seed = 1;
    let ch = draw_channel(2, 2, seed);
    let p_s = 10.0; // 10 dB
    let p_r = 100.0; // 20 dB
    let budget = PowerBudget::full_power(2, p_s, p_r);
    let opts = SweepOptions { grid_n: 8, ..SweepOptions::default() };

    let general = sweep_boundary(&ch, &budget, QcqpKind::General, &opts, seed).unwrap();
    let neutral = sweep_boundary(&ch, &budget, QcqpKind::Neutralized, &opts, seed).unwrap();
    let baseline = ic_baseline_region(&ch, p_s, 40, seed).unwrap();

    println!("boundary points (rate_1, rate_2) in bits/use:\n");
    println!("{:>10}  {:>18}  {:>18}", "gamma_2", "general relay", "neutralizing relay");
    for (g, n) in general.points.iter().zip(&neutral.points) {
        let fmt = |p: &relaybound::pareto::ParetoPoint| {
            if p.feasible {
                format!("({:.3}, {:.3})", p.rates[0], p.rates[1])
            } else {
                "unreachable".into()
            }
        };
        println!("{:>10.3}  {:>18}  {:>18}", g.targets[0], fmt(g), fmt(n));
    }

    let ne = nash_equilibrium_rates(&ch, p_s, None);
    println!("\nrelay-off equilibrium: ({:.3}, {:.3})", ne[0], ne[1]);
    println!(
        "best sum rate: relay off {:.3}, neutralizing {:.3}, general {:.3}",
        max_sum_rate(&baseline).unwrap(),
        max_sum_rate(&neutral).unwrap(),
        max_sum_rate(&general).unwrap(),
    );
    println!(
        "fairness gain over the equilibrium: general {:.3}, neutralizing {:.3}",
        proportional_fairness(&general, &ne),
        proportional_fairness(&neutral, &ne),
    );
    println!(
        "\nenvelope sizes: baseline {} of {}, general {} of {}",
        baseline.envelope().len(),
        baseline.points.len(),
        general.envelope().len(),
        general.points.len(),
    );
}
