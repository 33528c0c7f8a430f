//! Rate-region boundary sweeps and the metrics computed on them.
//!
//! The boundary procedure: compute each peer's single-user SINR ceiling,
//! lay a uniform target grid under those ceilings, and for every target
//! tuple design the relay that maximizes user 1's SINR subject to the
//! peers' targets (and, in neutralized mode, to exact interference
//! cancellation). Feasible tuples become boundary points with rates
//! `(C(γ_1^#), C(γ_2), …, C(γ_K))`; unreachable tuples are kept in the
//! sweep flagged infeasible.
//!
//! Source powers stay fixed during a sweep: sources are assumed unaware
//! of the relay and transmit at a predetermined operating point, full
//! power unless configured otherwise.
//!
//! The relay-off interference channel serves as the comparison baseline,
//! swept over source powers instead of relay matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{rate, sinr, sinr_in, ChannelRealization, PowerBudget, RelayMatrix};
use crate::error::{Error, Result};
use crate::neutralization::check_in_feasibility;
use crate::qcqp::{build_general, build_in, optimize_relay, project_null, QcqpKind};
use crate::sdp::{ExtractOptions, Extraction, SolveOptions};
use crate::{CMat, RVec};

/// One sample of a rate-region boundary (or of the baseline power sweep).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParetoPoint {
    /// Target SINRs γ_2..γ_K that parameterized this point.
    pub targets: Vec<f64>,
    /// Rate tuple in bits per channel use, user 1 first.
    pub rates: Vec<f64>,
    /// Achieved SINRs recomputed from the channel model, for auditing.
    pub sinrs: Vec<f64>,
    /// Source powers in effect at this point.
    pub powers: Vec<f64>,
    /// The designed relay matrix; absent for baseline and infeasible points.
    pub relay: Option<RelayMatrix>,
    /// How the relay was recovered from the relaxation, when one was solved.
    pub extraction: Option<Extraction>,
    /// Relaxation optimum: an upper bound on user 1's SINR at these targets.
    pub sdp_bound: f64,
    /// Duality gap reported by the solver.
    pub gap: f64,
    pub feasible: bool,
    /// Populated when the solver broke down on this tuple (infeasibility is
    /// not a failure; it is an answer).
    pub failure: Option<String>,
}

impl ParetoPoint {
    fn unreachable(targets: Vec<f64>, powers: Vec<f64>, k: usize) -> Self {
        ParetoPoint {
            targets,
            rates: vec![0.0; k],
            sinrs: vec![0.0; k],
            powers,
            relay: None,
            extraction: None,
            sdp_bound: 0.0,
            gap: 0.0,
            feasible: false,
            failure: None,
        }
    }

    fn failed(targets: Vec<f64>, powers: Vec<f64>, k: usize, why: String) -> Self {
        let mut p = ParetoPoint::unreachable(targets, powers, k);
        p.failure = Some(why);
        p
    }

    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Which family of sweep produced a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    IcBaseline,
    GeneralRelay,
    InRelay,
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegionKind::IcBaseline => "ic_baseline",
            RegionKind::GeneralRelay => "general_relay",
            RegionKind::InRelay => "in_relay",
        })
    }
}

/// A swept rate region: every grid point in sweep order, plus the
/// configuration needed to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateRegion {
    pub kind: RegionKind,
    /// Caller-chosen identifier, typically the channel's seed.
    pub channel_id: u64,
    pub p_s_max: f64,
    pub p_r_max: f64,
    /// Operating source powers during the sweep (baseline sweeps vary
    /// powers instead and leave this at the cap).
    pub powers: Vec<f64>,
    pub grid_n: usize,
    /// Single-user SINR ceilings that scaled the target grid; empty for
    /// the baseline.
    pub gamma_max: Vec<f64>,
    /// Tuples where the solver broke down (not mere infeasibility).
    pub solver_failures: usize,
    pub points: Vec<ParetoPoint>,
}

impl RateRegion {
    /// Feasible points not weakly dominated by another feasible point:
    /// the region's Pareto-optimal skyline. Raw sweep order is preserved.
    pub fn envelope(&self) -> Vec<&ParetoPoint> {
        let feas: Vec<&ParetoPoint> = self.points.iter().filter(|p| p.feasible).collect();
        feas.iter()
            .filter(|a| !feas.iter().any(|b| dominates(&b.rates, &a.rates)))
            .copied()
            .collect()
    }

    pub fn csv_header(k: usize) -> String {
        let mut cols = Vec::with_capacity(2 * k + 2);
        for j in 2..=k {
            cols.push(format!("gamma_{j}"));
        }
        for j in 1..=k {
            cols.push(format!("rate_{j}"));
        }
        cols.push("feasible".into());
        cols.push("extraction".into());
        cols.push("gap".into());
        cols.join(",")
    }

    /// Rows in sweep order. Floats use the shortest representation that
    /// round-trips, so equal runs produce equal bytes.
    pub fn to_csv(&self) -> String {
        let k = self.powers.len();
        let mut out = String::new();
        out.push_str(&Self::csv_header(k));
        out.push('\n');
        for pt in &self.points {
            let mut cols: Vec<String> = Vec::with_capacity(2 * k + 2);
            cols.extend(pt.targets.iter().map(|x| x.to_string()));
            cols.extend(pt.rates.iter().map(|x| x.to_string()));
            cols.push(pt.feasible.to_string());
            cols.push(match pt.extraction {
                Some(e) => e.to_string(),
                None => "none".into(),
            });
            cols.push(pt.gap.to_string());
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Weak Pareto dominance: at least as good everywhere, better somewhere.
fn dominates(b: &[f64], a: &[f64]) -> bool {
    b.iter().zip(a).all(|(x, y)| x >= y) && b.iter().zip(a).any(|(x, y)| x > y)
}

/// Knobs for a boundary sweep: grid density plus the solver and extraction
/// settings applied to every tuple.
#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub grid_n: usize,
    pub solve: SolveOptions,
    pub extract: ExtractOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid_n: 20,
            solve: SolveOptions::default(),
            extract: ExtractOptions::default(),
        }
    }
}

/// Restriction of the channel to user `j` alone: its direct link and its
/// two relay hops. The relay keeps all M antennas.
fn lone_user_channel(ch: &ChannelRealization, j: usize) -> ChannelRealization {
    ChannelRealization {
        k: 1,
        m: ch.m,
        h: CMat::from_element(1, 1, ch.h[(j, j)]),
        g_rt: CMat::from_column_slice(ch.m, 1, ch.g_rt.column(j).as_slice()),
        g_dr: CMat::from_column_slice(ch.m, 1, ch.g_dr.column(j).as_slice()),
    }
}

/// Best SINR user `j` can reach when it is alone in the system: the relay
/// is optimized for it under the relay power budget, with no interference
/// to receive or to cause. Both sweep families share this ceiling, since
/// a lone user leaves nothing to neutralize.
///
/// The relay power constraint is enforced even here: without it the
/// ceiling would be unbounded for an unconstrained relay.
pub fn single_user_point(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    j: usize,
    opts: &SweepOptions,
) -> Result<crate::qcqp::RelayDesign> {
    assert!(j < ch.k, "user index out of range");
    let sub = lone_user_channel(ch, j);
    let p = RVec::from_vec(vec![budget.p[j]]);
    let inst = build_general(&sub, &p, &[], budget.p_r_max);
    optimize_relay(&inst, &sub, &opts.solve, &opts.extract)
}

/// Solve one boundary tuple: design the relay for targets `targets` at the
/// budget's operating powers, then audit the result against the channel
/// model. Infeasible targets and solver breakdowns both come back as
/// points, never as errors, so sweeps keep their full grid.
pub fn boundary_point(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    kind: QcqpKind,
    targets: &[f64],
    opts: &SweepOptions,
) -> ParetoPoint {
    let k = ch.k;
    let p = budget.p_vec();
    let powers = budget.p.clone();
    let built = match kind {
        QcqpKind::General => Ok(build_general(ch, &p, targets, budget.p_r_max)),
        QcqpKind::Neutralized => build_in(ch, &p, targets, budget.p_r_max)
            .and_then(|inst| project_null(&inst)),
    };
    let inst = match built {
        Ok(inst) => inst,
        Err(e) => return ParetoPoint::failed(targets.to_vec(), powers, k, e.to_string()),
    };
    let design = match optimize_relay(&inst, ch, &opts.solve, &opts.extract) {
        Ok(d) => d,
        Err(Error::SdpInfeasible(_)) => {
            return ParetoPoint::unreachable(targets.to_vec(), powers, k);
        }
        Err(e) => return ParetoPoint::failed(targets.to_vec(), powers, k, e.to_string()),
    };

    let mut sinrs = Vec::with_capacity(k);
    for j in 0..k {
        let s = match kind {
            QcqpKind::General => Ok(sinr(ch, &p, &design.relay, j)),
            QcqpKind::Neutralized => sinr_in(ch, &p, &design.relay, j),
        };
        match s {
            Ok(v) => sinrs.push(v),
            Err(e) => {
                return ParetoPoint::failed(targets.to_vec(), powers, k, e.to_string());
            }
        }
    }
    // Rates as the boundary defines them: the peers are credited exactly
    // their targets (which the relay meets or exceeds), user 1 gets what
    // the extracted relay actually achieves.
    let mut rates = vec![rate(sinrs[0])];
    rates.extend(targets.iter().map(|&g| rate(g)));
    ParetoPoint {
        targets: targets.to_vec(),
        rates,
        sinrs,
        powers,
        relay: Some(design.relay),
        extraction: Some(design.extraction),
        sdp_bound: design.sdp_objective,
        gap: design.duality_gap,
        feasible: true,
        failure: None,
    }
}

/// Uniform grid `{0, γ/(n−1), …, γ}`.
fn gamma_grid(gamma_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| gamma_max * (i as f64 / (n - 1) as f64)).collect()
}

/// Row-major Cartesian product of the per-user grids: the first peer's
/// target varies slowest. Tuple order is the sweep's output order.
fn target_tuples(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = grids.iter().map(Vec::len).product();
    let mut tuples = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut t = vec![0.0; grids.len()];
        for (axis, grid) in grids.iter().enumerate().rev() {
            t[axis] = grid[idx % grid.len()];
            idx /= grid.len();
        }
        tuples.push(t);
    }
    tuples
}

/// Sweep the full boundary of one relay family over the target grid.
///
/// Grid ceilings come from the single-user points; a failure there aborts
/// the sweep (there is no grid without them), while per-tuple failures
/// are recorded in the region and counted.
///
/// In neutralized mode the budget is screened first: when even the
/// minimum-power neutralizing relay overruns it, every tuple is
/// unreachable regardless of targets and the grid is emitted infeasible
/// without touching the solver.
///
/// Grid points are independent and solved in parallel; results are merged
/// by grid index, so the output is identical for any thread count.
pub fn sweep_boundary(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    kind: QcqpKind,
    opts: &SweepOptions,
    channel_id: u64,
) -> Result<RateRegion> {
    if budget.p.len() != ch.k {
        return Err(Error::Dimension(format!(
            "budget carries {} powers for {} users",
            budget.p.len(),
            ch.k
        )));
    }
    if opts.grid_n < 2 {
        return Err(Error::Config("sweep grid needs at least 2 points per user".into()));
    }
    if kind == QcqpKind::Neutralized && ch.m != ch.k {
        return Err(Error::AntennaMismatch { antennas: ch.m, users: ch.k });
    }

    let mut gamma_max = Vec::with_capacity(ch.k - 1);
    for j in 1..ch.k {
        gamma_max.push(single_user_point(ch, budget, j, opts)?.vector_objective);
    }
    let grids: Vec<Vec<f64>> = gamma_max.iter().map(|&g| gamma_grid(g, opts.grid_n)).collect();
    let tuples = target_tuples(&grids);

    let region_kind = match kind {
        QcqpKind::General => RegionKind::GeneralRelay,
        QcqpKind::Neutralized => RegionKind::InRelay,
    };

    if kind == QcqpKind::Neutralized {
        let report = check_in_feasibility(ch, &budget.p_vec(), budget.p_r_max)?;
        if !report.feasible {
            let points = tuples
                .into_iter()
                .map(|t| ParetoPoint::unreachable(t, budget.p.clone(), ch.k))
                .collect();
            return Ok(RateRegion {
                kind: region_kind,
                channel_id,
                p_s_max: budget.p_s_max,
                p_r_max: budget.p_r_max,
                powers: budget.p.clone(),
                grid_n: opts.grid_n,
                gamma_max,
                solver_failures: 0,
                points,
            });
        }
    }

    let points: Vec<ParetoPoint> = tuples
        .par_iter()
        .map(|t| boundary_point(ch, budget, kind, t, opts))
        .collect();
    let solver_failures = points.iter().filter(|p| p.failure.is_some()).count();

    Ok(RateRegion {
        kind: region_kind,
        channel_id,
        p_s_max: budget.p_s_max,
        p_r_max: budget.p_r_max,
        powers: budget.p.clone(),
        grid_n: opts.grid_n,
        gamma_max,
        solver_failures,
        points,
    })
}

/// Relay-off baseline for two users: sweep both source powers over a
/// uniform grid on `[0, P_s^max]²` and record the exact rate pairs. The
/// grid includes the axes and the full-power corner, so the single-user
/// operating points and the full-power point are sampled exactly.
pub fn ic_baseline_region(
    ch: &ChannelRealization,
    p_s_max: f64,
    grid_n: usize,
    channel_id: u64,
) -> Result<RateRegion> {
    if ch.k != 2 {
        return Err(Error::Dimension(
            "baseline power sweep is dense only for two users".into(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::Config("baseline grid needs at least 2 points per axis".into()));
    }
    let r0 = RelayMatrix::zero(ch.m);
    let axis: Vec<f64> =
        (0..grid_n).map(|i| p_s_max * (i as f64 / (grid_n - 1) as f64)).collect();
    let mut points = Vec::with_capacity(grid_n * grid_n);
    for &p1 in &axis {
        for &p2 in &axis {
            let p = RVec::from_vec(vec![p1, p2]);
            let s = [sinr(ch, &p, &r0, 0), sinr(ch, &p, &r0, 1)];
            points.push(ParetoPoint {
                targets: vec![s[1]],
                rates: vec![rate(s[0]), rate(s[1])],
                sinrs: s.to_vec(),
                powers: vec![p1, p2],
                relay: None,
                extraction: None,
                sdp_bound: 0.0,
                gap: 0.0,
                feasible: true,
                failure: None,
            });
        }
    }
    Ok(RateRegion {
        kind: RegionKind::IcBaseline,
        channel_id,
        p_s_max,
        p_r_max: 0.0,
        powers: vec![p_s_max; 2],
        grid_n,
        gamma_max: Vec::new(),
        solver_failures: 0,
        points,
    })
}

/// Rates when every source transmits at full power without coordination:
/// the relay-off equilibrium for `relay = None`, or the operating point
/// under a given relay matrix.
pub fn nash_equilibrium_rates(
    ch: &ChannelRealization,
    p_s_max: f64,
    relay: Option<&RelayMatrix>,
) -> Vec<f64> {
    let r0;
    let r = match relay {
        Some(r) => r,
        None => {
            r0 = RelayMatrix::zero(ch.m);
            &r0
        }
    };
    let p = RVec::from_element(ch.k, p_s_max);
    (0..ch.k).map(|j| rate(sinr(ch, &p, r, j))).collect()
}

/// Largest feasible sum rate in a region. An all-infeasible region sums to
/// zero: a mode that cannot run achieves no rate. An empty region is a
/// caller bug and errors.
pub fn max_sum_rate(region: &RateRegion) -> Result<f64> {
    if region.points.is_empty() {
        return Err(Error::EmptyRegion(format!("{} region has no points", region.kind)));
    }
    Ok(region
        .points
        .iter()
        .filter(|p| p.feasible)
        .map(ParetoPoint::sum_rate)
        .fold(0.0, f64::max))
}

/// Proportional-fairness utility of a region against an equilibrium rate
/// tuple: the best product of per-user rate gains, with users below their
/// equilibrium rate contributing zero. A region with nothing beyond the
/// equilibrium scores zero.
pub fn proportional_fairness(region: &RateRegion, ne: &[f64]) -> f64 {
    region
        .points
        .iter()
        .filter(|p| p.feasible)
        .map(|p| {
            p.rates
                .iter()
                .zip(ne)
                .map(|(&r, &base)| (r - base).max(0.0))
                .product::<f64>()
        })
        .fold(0.0, f64::max)
}
