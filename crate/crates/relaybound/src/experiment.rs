//! Reproducible Monte-Carlo experiment runners behind the CLI.
//!
//! A TOML [`ExperimentConfig`] plus a seed fully determines every output
//! byte: channel c of a campaign is drawn from `seed + c`, sweeps merge
//! results by index, and floats are printed in the shortest form that
//! round-trips. Running the same configuration twice, with any number of
//! threads, produces identical files.
//!
//! This is the only layer that speaks dB; everything below works on
//! noise-normalized linear powers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, ChannelRealization, PowerBudget, RelayMatrix};
use crate::error::{Error, Result};
use crate::neutralization::{check_in_feasibility, minimal_in_relay};
use crate::pareto::{
    ic_baseline_region, max_sum_rate, nash_equilibrium_rates, proportional_fairness,
    sweep_boundary, RateRegion, SweepOptions,
};
use crate::qcqp::QcqpKind;
use crate::RVec;

/// Power quantity dB → linear.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Power quantity linear → dB.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Which systems a campaign evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Relay off: the plain interference channel, swept over powers.
    Ic,
    /// Relay optimized without structural constraints.
    General,
    /// Relay constrained to neutralize all interference.
    In,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Ic => "ic",
            Mode::General => "general",
            Mode::In => "in",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ic" => Ok(Mode::Ic),
            "general" => Ok(Mode::General),
            "in" => Ok(Mode::In),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; choose from ic, general, in"
            ))),
        }
    }
}

/// A dB quantity that is either one value or a sweep list in TOML:
/// `p_r_max_db = 20.0` or `p_r_max_db = [5.0, 10.0, 15.0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DbSweep {
    One(f64),
    Many(Vec<f64>),
}

impl DbSweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DbSweep::One(x) => vec![*x],
            DbSweep::Many(xs) => xs.clone(),
        }
    }

    pub fn first(&self) -> f64 {
        self.values()[0]
    }

    fn check(&self, name: &str) -> Result<()> {
        let vs = self.values();
        if vs.is_empty() {
            return Err(Error::Config(format!("{name} sweep list is empty")));
        }
        if vs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite dB values")));
        }
        Ok(())
    }
}

fn default_grid_n() -> usize {
    20
}
fn default_num_channels() -> usize {
    1
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Ic, Mode::General, Mode::In]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment campaign, loadable from TOML. CLI flags override fields
/// after loading; [`ExperimentConfig::validate`] runs after overrides.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of source-destination pairs.
    pub k: usize,
    /// Number of relay antennas.
    pub m: usize,
    /// Per-source power cap in dB (sweep list allowed; used by the fixed
    /// channel fairness sweep).
    pub p_s_max_db: DbSweep,
    /// Relay power cap in dB (sweep list allowed).
    pub p_r_max_db: DbSweep,
    /// Target-grid points per user in boundary sweeps.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Independent channel draws per campaign.
    #[serde(default = "default_num_channels")]
    pub num_channels: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k: 2,
            m: 2,
            p_s_max_db: DbSweep::One(10.0),
            p_r_max_db: DbSweep::One(20.0),
            grid_n: default_grid_n(),
            num_channels: default_num_channels(),
            seed: 0,
            modes: default_modes(),
            output_dir: default_output_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::TomlParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(Error::Config("k and m must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("modes must not be empty".into()));
        }
        if self.modes.contains(&Mode::In) && self.k != self.m {
            return Err(Error::Config(format!(
                "mode `in` needs k == m (neutralization inverts the relay hops), got k={} m={}",
                self.k, self.m
            )));
        }
        if self.grid_n < 2 {
            return Err(Error::Config("grid_n must be at least 2".into()));
        }
        if self.num_channels == 0 {
            return Err(Error::Config("num_channels must be positive".into()));
        }
        self.p_s_max_db.check("p_s_max_db")?;
        self.p_r_max_db.check("p_r_max_db")?;
        Ok(())
    }

    /// Deterministic per-channel seed: campaign seed plus channel index.
    pub fn channel_seed(&self, idx: usize) -> u64 {
        self.seed.wrapping_add(idx as u64)
    }

    pub fn channel(&self, idx: usize) -> ChannelRealization {
        draw_channel(self.k, self.m, self.channel_seed(idx))
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions { grid_n: self.grid_n, ..SweepOptions::default() }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Region of one mode at one operating point, reusing the shared sweep
/// machinery. The baseline ignores the relay budget.
fn region_for_mode(
    ch: &ChannelRealization,
    mode: Mode,
    p_s: f64,
    p_r: f64,
    opts: &SweepOptions,
    channel_id: u64,
) -> Result<RateRegion> {
    match mode {
        Mode::Ic => ic_baseline_region(ch, p_s, opts.grid_n, channel_id),
        Mode::General => {
            let budget = PowerBudget::full_power(ch.k, p_s, p_r);
            sweep_boundary(ch, &budget, QcqpKind::General, opts, channel_id)
        }
        Mode::In => {
            let budget = PowerBudget::full_power(ch.k, p_s, p_r);
            sweep_boundary(ch, &budget, QcqpKind::Neutralized, opts, channel_id)
        }
    }
}

/// Compact dB tag for filenames: `20` for 20.0 dB, `7.5` for 7.5 dB.
fn db_tag(db: f64) -> String {
    db.to_string()
}

/// Boundary sweeps per channel and relay budget: one CSV and one fully
/// reproducible JSON per (channel, budget, mode), the channel itself, and
/// the full-power relay-off equilibrium as a marker file.
pub fn cmd_region(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.modes.contains(&Mode::Ic) && cfg.k != 2 {
        return Err(Error::Config("mode `ic` sweeps powers densely and needs k = 2".into()));
    }
    let p_s = db_to_lin(cfg.p_s_max_db.first());
    let opts = cfg.sweep_options();

    let per_channel: Vec<Result<Vec<(String, String)>>> = (0..cfg.num_channels)
        .into_par_iter()
        .map(|c| {
            let ch = cfg.channel(c);
            let id = cfg.channel_seed(c);
            let mut files = Vec::new();
            files.push((
                format!("channel_ch{c:03}.json"),
                serde_json::to_string_pretty(&ch)?,
            ));
            let ne = nash_equilibrium_rates(&ch, p_s, None);
            let mut ne_csv = String::from("mode,");
            ne_csv.push_str(
                &(1..=cfg.k).map(|j| format!("rate_{j}")).collect::<Vec<_>>().join(","),
            );
            ne_csv.push('\n');
            let _ = writeln!(
                ne_csv,
                "ic,{}",
                ne.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
            );
            files.push((format!("ne_ch{c:03}.csv"), ne_csv));

            for &p_r_db in &cfg.p_r_max_db.values() {
                let p_r = db_to_lin(p_r_db);
                for &mode in &cfg.modes {
                    let region = region_for_mode(&ch, mode, p_s, p_r, &opts, id)?;
                    let stem = format!("region_pr{}_ch{c:03}_{mode}", db_tag(p_r_db));
                    files.push((format!("{stem}.csv"), region.to_csv()));
                    files.push((format!("{stem}.json"), region.to_json()?));
                }
            }
            Ok(files)
        })
        .collect();

    let mut written = Vec::new();
    for files in per_channel {
        for (name, contents) in files? {
            written.push(write_file(&cfg.output_dir, &name, &contents)?);
        }
    }
    Ok(written)
}

struct SumRateRow {
    p_r_db: f64,
    channel: usize,
    seed: u64,
    mode: Mode,
    max_sum_rate: f64,
    in_feasible: bool,
}

/// Best sum rate per mode, averaged over channels, for each relay budget
/// in the sweep. Raw per-channel values are emitted alongside the means;
/// the `feasible_fraction` column reports how often neutralization fit
/// the budget (1 by definition for the other modes).
pub fn cmd_sumrate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.modes.contains(&Mode::Ic) && cfg.k != 2 {
        return Err(Error::Config("mode `ic` sweeps powers densely and needs k = 2".into()));
    }
    let p_s = db_to_lin(cfg.p_s_max_db.first());
    let opts = cfg.sweep_options();
    let p_r_list = cfg.p_r_max_db.values();

    let per_channel: Vec<Result<Vec<SumRateRow>>> = (0..cfg.num_channels)
        .into_par_iter()
        .map(|c| {
            let ch = cfg.channel(c);
            let id = cfg.channel_seed(c);
            let mut rows = Vec::new();
            for &p_r_db in &p_r_list {
                let p_r = db_to_lin(p_r_db);
                for &mode in &cfg.modes {
                    let region = region_for_mode(&ch, mode, p_s, p_r, &opts, id)?;
                    let in_feasible = mode != Mode::In
                        || region.points.iter().any(|p| p.feasible);
                    rows.push(SumRateRow {
                        p_r_db,
                        channel: c,
                        seed: id,
                        mode,
                        max_sum_rate: max_sum_rate(&region)?,
                        in_feasible,
                    });
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_channel {
        rows.extend(r?);
    }

    let mut raw = String::from("p_r_db,channel,channel_seed,mode,max_sum_rate,in_feasible\n");
    for r in &rows {
        let _ = writeln!(
            raw,
            "{},{},{},{},{},{}",
            r.p_r_db, r.channel, r.seed, r.mode, r.max_sum_rate, r.in_feasible
        );
    }

    let mut mean = String::from("p_r_db,mode,mean_max_sum_rate,feasible_fraction,num_channels\n");
    for &p_r_db in &p_r_list {
        for &mode in &cfg.modes {
            let sel: Vec<&SumRateRow> =
                rows.iter().filter(|r| r.p_r_db == p_r_db && r.mode == mode).collect();
            let n = sel.len() as f64;
            let avg = sel.iter().map(|r| r.max_sum_rate).sum::<f64>() / n;
            let frac = sel.iter().filter(|r| r.in_feasible).count() as f64 / n;
            let _ = writeln!(mean, "{},{},{},{},{}", p_r_db, mode, avg, frac, sel.len());
        }
    }

    Ok(vec![
        write_file(&cfg.output_dir, "sumrate_raw.csv", &raw)?,
        write_file(&cfg.output_dir, "sumrate_mean.csv", &mean)?,
    ])
}

struct FairnessRow {
    p_r_db: f64,
    channel: usize,
    seed: u64,
    mode: Mode,
    fairness: f64,
    in_feasible: bool,
}

/// Proportional-fairness gain over the relay-off full-power equilibrium,
/// averaged over channels per relay budget; plus the fixed-channel
/// two-dimensional (P_s, P_r) sweep with the neutralization feasibility
/// frontier located by bisection.
pub fn cmd_fairness(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.k != 2 {
        return Err(Error::Config("fairness experiments are defined for k = 2".into()));
    }
    let p_s_first = db_to_lin(cfg.p_s_max_db.first());
    let opts = cfg.sweep_options();
    let p_r_list = cfg.p_r_max_db.values();

    let per_channel: Vec<Result<Vec<FairnessRow>>> = (0..cfg.num_channels)
        .into_par_iter()
        .map(|c| {
            let ch = cfg.channel(c);
            let id = cfg.channel_seed(c);
            let ne = nash_equilibrium_rates(&ch, p_s_first, None);
            let mut rows = Vec::new();
            for &p_r_db in &p_r_list {
                let p_r = db_to_lin(p_r_db);
                for &mode in &cfg.modes {
                    let region = region_for_mode(&ch, mode, p_s_first, p_r, &opts, id)?;
                    let in_feasible = mode != Mode::In
                        || region.points.iter().any(|p| p.feasible);
                    rows.push(FairnessRow {
                        p_r_db,
                        channel: c,
                        seed: id,
                        mode,
                        fairness: proportional_fairness(&region, &ne),
                        in_feasible,
                    });
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_channel {
        rows.extend(r?);
    }

    let mut raw = String::from("p_r_db,channel,channel_seed,mode,fairness,in_feasible\n");
    for r in &rows {
        let _ = writeln!(
            raw,
            "{},{},{},{},{},{}",
            r.p_r_db, r.channel, r.seed, r.mode, r.fairness, r.in_feasible
        );
    }

    let mut mean = String::from("p_r_db,mode,mean_fairness,feasible_fraction,num_channels\n");
    for &p_r_db in &p_r_list {
        for &mode in &cfg.modes {
            let sel: Vec<&FairnessRow> =
                rows.iter().filter(|r| r.p_r_db == p_r_db && r.mode == mode).collect();
            let n = sel.len() as f64;
            let avg = sel.iter().map(|r| r.fairness).sum::<f64>() / n;
            let frac = sel.iter().filter(|r| r.in_feasible).count() as f64 / n;
            let _ = writeln!(mean, "{},{},{},{},{}", p_r_db, mode, avg, frac, sel.len());
        }
    }

    // Fixed-channel study: one canonical draw from the campaign seed,
    // sum rate and fairness over the full (P_s, P_r) grid.
    let fixed = cfg.channel(0);
    let fixed_id = cfg.channel_seed(0);
    let p_s_list = cfg.p_s_max_db.values();

    let grid: Vec<(f64, f64)> = p_s_list
        .iter()
        .flat_map(|&s| p_r_list.iter().map(move |&r| (s, r)))
        .collect();
    let cells: Vec<Result<Vec<String>>> = grid
        .par_iter()
        .map(|&(p_s_db, p_r_db)| {
            let p_s = db_to_lin(p_s_db);
            let p_r = db_to_lin(p_r_db);
            let ne = nash_equilibrium_rates(&fixed, p_s, None);
            let mut lines = Vec::new();
            for &mode in &cfg.modes {
                let region = region_for_mode(&fixed, mode, p_s, p_r, &opts, fixed_id)?;
                let in_feasible =
                    mode != Mode::In || region.points.iter().any(|p| p.feasible);
                let fair = proportional_fairness(&region, &ne);
                let sum = max_sum_rate(&region)?;
                lines.push(format!("{p_s_db},{p_r_db},{mode},{fair},{sum},{in_feasible}"));
            }
            Ok(lines)
        })
        .collect();

    let mut two_d = String::from("p_s_db,p_r_db,mode,fairness,max_sum_rate,in_feasible\n");
    for cell in cells {
        for line in cell? {
            two_d.push_str(&line);
            two_d.push('\n');
        }
    }

    // Neutralization frontier: for each relay budget, the source power at
    // which the minimum neutralizing relay power first overruns it.
    let mut frontier = String::from("p_r_db,p_s_frontier_db\n");
    for &p_r_db in &p_r_list {
        let line = match in_frontier_p_s(&fixed, db_to_lin(p_r_db))? {
            Some(p_s_star) => format!("{},{}", p_r_db, lin_to_db(p_s_star)),
            None => format!("{p_r_db},"),
        };
        frontier.push_str(&line);
        frontier.push('\n');
    }

    Ok(vec![
        write_file(&cfg.output_dir, "fairness_raw.csv", &raw)?,
        write_file(&cfg.output_dir, "fairness_mean.csv", &mean)?,
        write_file(&cfg.output_dir, "channel_fixed.json", &serde_json::to_string_pretty(&fixed)?)?,
        write_file(&cfg.output_dir, "fairness_2d.csv", &two_d)?,
        write_file(&cfg.output_dir, "in_frontier.csv", &frontier)?,
    ])
}

/// Largest full-power source level at which neutralizing every cross link
/// still fits the relay budget. The minimum neutralization power grows
/// monotonically with source power, so bisection is exact; `None` means
/// the frontier lies outside [-60, +60] dB around unit power.
pub fn in_frontier_p_s(ch: &ChannelRealization, p_r_max: f64) -> Result<Option<f64>> {
    let needs = |p_s: f64| -> Result<f64> {
        let p = RVec::from_element(ch.k, p_s);
        Ok(check_in_feasibility(ch, &p, p_r_max)?.min_power)
    };
    let (mut lo, mut hi) = (db_to_lin(-60.0), db_to_lin(60.0));
    if needs(lo)? > p_r_max || needs(hi)? <= p_r_max {
        return Ok(None);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if needs(mid)? <= p_r_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Everything the feasibility probe reports, JSON-serialized for the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityOutput {
    pub channel_seed: Option<u64>,
    pub p_s_max_db: f64,
    pub p_r_max_db: f64,
    /// Relay power needed to neutralize with no power to spare.
    pub min_power: f64,
    pub budget: f64,
    pub feasible: bool,
    /// The minimum-power neutralizing relay, when one fits the budget.
    pub relay: Option<RelayMatrix>,
    /// Largest cross-link residual of that relay, as a sanity figure.
    pub residual: Option<f64>,
}

/// Check whether interference neutralization fits the relay budget for
/// one channel: either a supplied one or the campaign's first draw.
pub fn cmd_feasibility(
    cfg: &ExperimentConfig,
    channel: Option<ChannelRealization>,
) -> Result<(Vec<PathBuf>, FeasibilityOutput)> {
    cfg.validate()?;
    let (ch, seed) = match channel {
        Some(ch) => (ch, None),
        None => (cfg.channel(0), Some(cfg.channel_seed(0))),
    };
    if ch.k != ch.m {
        return Err(Error::AntennaMismatch { antennas: ch.m, users: ch.k });
    }
    let p_s = db_to_lin(cfg.p_s_max_db.first());
    let p_r = db_to_lin(cfg.p_r_max_db.first());
    let p = RVec::from_element(ch.k, p_s);
    let report = check_in_feasibility(&ch, &p, p_r)?;
    let (relay, residual) = if report.feasible {
        let (_, r) = minimal_in_relay(&report, &ch)?;
        let res = ch.in_residual(&r);
        (Some(r), Some(res))
    } else {
        (None, None)
    };
    let out = FeasibilityOutput {
        channel_seed: seed,
        p_s_max_db: cfg.p_s_max_db.first(),
        p_r_max_db: cfg.p_r_max_db.first(),
        min_power: report.min_power,
        budget: report.budget,
        feasible: report.feasible,
        relay,
        residual,
    };
    let files = vec![
        write_file(&cfg.output_dir, "feasibility.json", &serde_json::to_string_pretty(&out)?)?,
        write_file(&cfg.output_dir, "channel_probe.json", &serde_json::to_string_pretty(&ch)?)?,
    ];
    Ok((files, out))
}
