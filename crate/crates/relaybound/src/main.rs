//! Command-line harness around the experiment runners. All logic lives in
//! the library; this binary only parses flags, merges them over the config
//! file, and reports what was written.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relaybound::channel::ChannelRealization;
use relaybound::experiment::{
    cmd_fairness, cmd_feasibility, cmd_region, cmd_sumrate, ExperimentConfig, Mode,
};

#[derive(Parser)]
#[command(
    name = "relaybound",
    about = "Rate-region boundaries of interference channels with an instantaneous \
             amplify-and-forward relay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Campaign seed (channel c is drawn from seed + c).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV/JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated subset of: ic, general, in.
    #[arg(long, global = true, value_delimiter = ',')]
    modes: Option<Vec<String>>,

    /// Target-grid points per user in boundary sweeps.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,

    /// Number of independent channel draws.
    #[arg(long, global = true)]
    channels: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep rate-region boundaries per channel and write them as CSV+JSON.
    Region,
    /// Best sum rate per mode, averaged over channels, for each relay budget.
    Sumrate,
    /// Proportional-fairness gain over the relay-off equilibrium, plus the
    /// fixed-channel (P_s, P_r) sweep and the neutralization frontier.
    Fairness,
    /// Check whether interference neutralization fits the relay budget.
    Feasibility {
        /// Channel JSON to probe instead of drawing one from the seed.
        channel: Option<PathBuf>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, relaybound::Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(modes) = &cli.modes {
        cfg.modes = modes.iter().map(|s| s.parse::<Mode>()).collect::<Result<_, _>>()?;
    }
    if let Some(grid_n) = cli.grid_n {
        cfg.grid_n = grid_n;
    }
    if let Some(channels) = cli.channels {
        cfg.num_channels = channels;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Status lines must survive a closed pipe (`relaybound ... | head`), so
/// stdout write errors are dropped instead of panicking.
fn say(args: std::fmt::Arguments) {
    let _ = std::io::stdout().write_fmt(args);
    let _ = std::io::stdout().write_all(b"\n");
}

fn run(cli: &Cli) -> Result<(), relaybound::Error> {
    let cfg = build_config(cli)?;
    let files = match &cli.command {
        Command::Region => cmd_region(&cfg)?,
        Command::Sumrate => cmd_sumrate(&cfg)?,
        Command::Fairness => cmd_fairness(&cfg)?,
        Command::Feasibility { channel } => {
            let ch = match channel {
                Some(path) => Some(serde_json::from_str::<ChannelRealization>(
                    &std::fs::read_to_string(path)?,
                )?),
                None => None,
            };
            let (files, out) = cmd_feasibility(&cfg, ch)?;
            say(format_args!(
                "neutralization {} (needs {:.6}, budget {:.6})",
                if out.feasible { "feasible" } else { "infeasible" },
                out.min_power,
                out.budget
            ));
            files
        }
    };
    for f in files {
        say(format_args!("wrote {}", f.display()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
