//! Closed-form Pareto-optimal source powers for a fixed relay matrix.
//!
//! With the relay frozen, maximizing user 1's SINR subject to target SINRs
//! for the other users, per-source power caps and the relay power budget
//! admits an explicit solution. The key structural fact: at an optimum all
//! target-SINR constraints hold with equality (lowering an over-achieving
//! peer's power only helps everyone else), which pins `p_2..p_K` to an
//! affine function of `p_1` and leaves a one-dimensional monotone search
//! that the budget caps resolve in closed form.
//!
//! A neutralizing relay decouples the users entirely, so each peer's power
//! follows from its own target alone and user 1 takes whatever relay power
//! headroom remains.
//!
//! Everything here is re-verified numerically against the channel model
//! before being reported feasible: a budget too tight to meet the targets
//! comes back as `feasible: false`, never as a silently wrong tuple.

use crate::channel::{relay_power, sinr, sinr_in, ChannelRealization, RelayMatrix};
use crate::error::{Error, Result};
use crate::linalg::checked_inverse;
use crate::{C64, CMat, CVec, RVec};

/// Relative slack used when auditing a candidate power tuple against the
/// exact channel-model constraints.
pub const POWER_VERIFY_TOL: f64 = 1e-6;

/// Which bound pinned user 1's power.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum P1Cap {
    /// The per-source cap `P_s^max`.
    SourceMax,
    /// The relay power budget.
    RelayBudget,
    /// A peer would need more than `P_s^max` to keep its target.
    PeerPower,
}

/// A source power allocation with its audit trail.
#[derive(Clone, Debug)]
pub struct PowerSolution {
    pub p: RVec,
    /// User 1's SINR at `p`, recomputed from the channel model.
    pub sinr_1: f64,
    /// Which cap determined `p_1` (meaningless when infeasible).
    pub p1_cap: P1Cap,
    /// Relay budget met with equality (within `POWER_VERIFY_TOL`).
    pub relay_power_active: bool,
    /// Some peer power was clamped onto `P_s^max` by numerical noise.
    pub clamped: bool,
    /// Whether the targets are attainable at all under the budgets.
    pub feasible: bool,
}

impl PowerSolution {
    fn infeasible(k: usize) -> Self {
        PowerSolution {
            p: RVec::zeros(k),
            sinr_1: 0.0,
            p1_cap: P1Cap::SourceMax,
            relay_power_active: false,
            clamped: false,
            feasible: false,
        }
    }
}

fn eff_gain_sq(ch: &ChannelRealization, r: &RelayMatrix, j: usize, l: usize) -> f64 {
    ch.effective_gain(r, j, l).norm_sqr()
}

/// `‖R g_rl‖²`, the relay transmit power spent per unit of source power l.
fn forward_gain_sq(ch: &ChannelRealization, r: &RelayMatrix, l: usize) -> f64 {
    let g = CVec::from_column_slice(ch.g_rt.column(l).as_slice());
    (&r.r * g).norm_squared()
}

fn relay_noise_floor(ch: &ChannelRealization, r: &RelayMatrix, j: usize) -> f64 {
    ch.relay_row(r, j).norm_squared() + 1.0
}

fn check_targets_len(ch: &ChannelRealization, targets: &[f64]) -> Result<()> {
    if targets.len() != ch.k - 1 {
        return Err(Error::Dimension(format!(
            "need {} target SINRs for {} users, got {}",
            ch.k - 1,
            ch.k,
            targets.len()
        )));
    }
    if targets.iter().any(|&g| g < 0.0) {
        return Err(Error::Dimension("target SINRs must be nonnegative".into()));
    }
    Ok(())
}

/// Audit a candidate tuple against the exact channel model and fill in the
/// solution record. `neutralized` picks which SINR formula peers must meet.
fn audited(
    ch: &ChannelRealization,
    r: &RelayMatrix,
    targets: &[f64],
    p_s_max: f64,
    p_r_max: f64,
    p: RVec,
    p1_cap: P1Cap,
    clamped: bool,
    neutralized: bool,
) -> Result<PowerSolution> {
    let k = ch.k;
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Ok(PowerSolution::infeasible(k));
    }
    let peer_sinr = |j: usize| -> Result<f64> {
        if neutralized {
            sinr_in(ch, &p, r, j)
        } else {
            Ok(sinr(ch, &p, r, j))
        }
    };
    let mut ok = p.iter().all(|&x| x <= p_s_max * (1.0 + POWER_VERIFY_TOL));
    for j in 1..k {
        ok &= peer_sinr(j)? >= targets[j - 1] * (1.0 - POWER_VERIFY_TOL) - 1e-12;
    }
    let pw = relay_power(ch, &p, r);
    ok &= pw <= p_r_max * (1.0 + POWER_VERIFY_TOL);
    if !ok {
        return Ok(PowerSolution::infeasible(k));
    }
    let sinr_1 = peer_sinr(0)?;
    Ok(PowerSolution {
        sinr_1,
        p1_cap,
        relay_power_active: (pw - p_r_max).abs() <= POWER_VERIFY_TOL * p_r_max.max(1.0),
        clamped,
        feasible: true,
        p,
    })
}

/// Pareto-optimal powers for a general (non-neutralizing) relay matrix.
///
/// Builds the active-target linear system `A p = q` over users 2..K, folds
/// it into the relay budget and the per-source caps, and takes the tightest
/// of the three resulting bounds on `p_1`:
/// - the per-source cap itself,
/// - the relay budget after substituting the peers' responses (only a true
///   upper bound when its denominator is positive; otherwise the budget
///   cannot be exhausted by `p_1` and the bound is vacuous),
/// - for each peer row with a negative `p_1` coefficient, the point where
///   that peer's response would exceed the source cap.
pub fn optimal_power_general(
    ch: &ChannelRealization,
    r: &RelayMatrix,
    targets: &[f64],
    p_s_max: f64,
    p_r_max: f64,
) -> Result<PowerSolution> {
    check_targets_len(ch, targets)?;
    let k = ch.k;
    if k == 1 {
        // Single user: spend as much as both budgets allow.
        let fwd = forward_gain_sq(ch, r, 0);
        let head = p_r_max - r.r.norm_squared();
        let mut p1 = if fwd > 0.0 { (head / fwd).min(p_s_max) } else { p_s_max };
        let cap = if p1 < p_s_max { P1Cap::RelayBudget } else { P1Cap::SourceMax };
        if p1 < 0.0 {
            p1 = f64::NEG_INFINITY;
        }
        return audited(ch, r, targets, p_s_max, p_r_max, RVec::from_vec(vec![p1]), cap, false, false);
    }

    // Row m covers user j = m+1: e_jj p_j − γ_j Σ_{l≠j} e_jl p_l = q_m.
    let mut a = CMat::zeros(k - 1, k);
    let mut q = RVec::zeros(k - 1);
    for m in 0..k - 1 {
        let j = m + 1;
        let gamma = targets[m];
        for l in 0..k {
            a[(m, l)] = C64::new(
                if l == j { eff_gain_sq(ch, r, j, j) } else { -gamma * eff_gain_sq(ch, r, j, l) },
                0.0,
            );
        }
        q[m] = gamma * relay_noise_floor(ch, r, j);
    }
    let a2 = a.view((0, 1), (k - 1, k - 1)).into_owned();
    let a2_inv = checked_inverse(&a2, "target-SINR system")?;
    let a1 = CVec::from_fn(k - 1, |m, _| a[(m, 0)]);

    // Peer responses are affine in p_1: p_{2:K}(p_1) = base + slope·p_1.
    let base_c = &a2_inv * CVec::from_fn(k - 1, |m, _| C64::new(q[m], 0.0));
    let slope_c = -(&a2_inv * &a1);
    let base = RVec::from_fn(k - 1, |m, _| base_c[m].re);
    let slope = RVec::from_fn(k - 1, |m, _| slope_c[m].re);

    let mut p1 = p_s_max;
    let mut cap = P1Cap::SourceMax;

    // Relay budget: (Σ_l fwd_l p_l) + tr(RRᴴ) ≤ P_r.
    let fwd0 = forward_gain_sq(ch, r, 0);
    let mut budget_num = p_r_max - r.r.norm_squared();
    let mut budget_den = fwd0;
    for m in 0..k - 1 {
        let fwd = forward_gain_sq(ch, r, m + 1);
        budget_num -= fwd * base[m];
        budget_den += fwd * slope[m];
    }
    if budget_den > 0.0 {
        let bound = budget_num / budget_den;
        if bound < p1 {
            p1 = bound;
            cap = P1Cap::RelayBudget;
        }
    } else if budget_num < 0.0 {
        // Relay power only moves away from the budget as p_1 falls, yet
        // already exceeds it at p_1 = 0: the targets are unaffordable.
        return Ok(PowerSolution::infeasible(k));
    }

    // Source caps on the peers, translated onto p_1 through the responses.
    for m in 0..k - 1 {
        let a_m1 = a1[m].re;
        let rhs = q[m] - p_s_max * (0..k - 1).map(|l| a2[(m, l)].re).sum::<f64>();
        if a_m1 < 0.0 {
            let bound = rhs / a_m1;
            if bound < p1 {
                p1 = bound;
                cap = P1Cap::PeerPower;
            }
        } else if rhs > 0.0 {
            // No p_1 can pull this peer back under its source cap.
            return Ok(PowerSolution::infeasible(k));
        }
    }

    if p1 < 0.0 {
        return Ok(PowerSolution::infeasible(k));
    }

    let mut p = RVec::zeros(k);
    p[0] = p1;
    let mut clamped = false;
    for m in 0..k - 1 {
        let mut pj = base[m] + slope[m] * p1;
        if pj > p_s_max {
            // The bound logic keeps overshoot at rounding level; anything
            // material fails the audit below.
            clamped = true;
            pj = pj.min(p_s_max * (1.0 + POWER_VERIFY_TOL));
        }
        if pj < 0.0 && pj > -1e-12 {
            pj = 0.0;
        }
        p[m + 1] = pj;
    }
    audited(ch, r, targets, p_s_max, p_r_max, p, cap, clamped, false)
}

/// Pareto-optimal powers for a neutralizing relay matrix.
///
/// Neutralization removes all cross terms, so each peer's power follows
/// from its own target alone; user 1 then absorbs the remaining relay
/// power headroom, capped by its own source budget.
pub fn optimal_power_in(
    ch: &ChannelRealization,
    r: &RelayMatrix,
    targets: &[f64],
    p_s_max: f64,
    p_r_max: f64,
) -> Result<PowerSolution> {
    check_targets_len(ch, targets)?;
    let k = ch.k;
    let residual = ch.in_residual(r);
    let scale = ch.max_direct_gain().max(1e-300);
    if residual > crate::channel::IN_RESIDUAL_REL_TOL * scale {
        return Err(Error::Dimension(format!(
            "relay does not neutralize: residual {residual:.3e} vs direct scale {scale:.3e}"
        )));
    }

    let mut p = RVec::zeros(k);
    let mut spent = r.r.norm_squared();
    for j in 1..k {
        let gamma = targets[j - 1];
        let gain = eff_gain_sq(ch, r, j, j);
        let need = gamma * relay_noise_floor(ch, r, j);
        let pj = if gamma == 0.0 {
            0.0
        } else if gain <= 0.0 {
            return Ok(PowerSolution::infeasible(k));
        } else {
            need / gain
        };
        if pj > p_s_max * (1.0 + POWER_VERIFY_TOL) {
            return Ok(PowerSolution::infeasible(k));
        }
        p[j] = pj.min(p_s_max);
        spent += forward_gain_sq(ch, r, j) * p[j];
    }

    let fwd0 = forward_gain_sq(ch, r, 0);
    let head = p_r_max - spent;
    let (p1, cap) = if fwd0 > 0.0 {
        let by_relay = head / fwd0;
        if by_relay < p_s_max {
            (by_relay, P1Cap::RelayBudget)
        } else {
            (p_s_max, P1Cap::SourceMax)
        }
    } else if head >= -POWER_VERIFY_TOL * p_r_max.max(1.0) {
        (p_s_max, P1Cap::SourceMax)
    } else {
        (f64::NEG_INFINITY, P1Cap::RelayBudget)
    };
    if p1 < 0.0 {
        return Ok(PowerSolution::infeasible(k));
    }
    p[0] = p1;
    audited(ch, r, targets, p_s_max, p_r_max, p, cap, false, true)
}

/// Exhaustive grid oracle over `[0, P_s^max]²` for two users: checks every
/// tuple against the exact channel model and keeps the best user-1 SINR.
/// Resolution-limited by construction; used to validate the closed forms.
pub fn brute_force_power(
    ch: &ChannelRealization,
    r: &RelayMatrix,
    targets: &[f64],
    p_s_max: f64,
    p_r_max: f64,
    grid_n: usize,
) -> Result<PowerSolution> {
    if ch.k != 2 {
        return Err(Error::Dimension("grid oracle only covers two users".into()));
    }
    check_targets_len(ch, targets)?;
    assert!(grid_n >= 2, "grid needs at least two points per axis");
    let gamma = targets[0];
    let mut best: Option<(RVec, f64)> = None;
    for i in 0..grid_n {
        let p1 = p_s_max * i as f64 / (grid_n - 1) as f64;
        for j in 0..grid_n {
            let p2 = p_s_max * j as f64 / (grid_n - 1) as f64;
            let p = RVec::from_vec(vec![p1, p2]);
            if relay_power(ch, &p, r) > p_r_max {
                continue;
            }
            if sinr(ch, &p, r, 1) < gamma {
                continue;
            }
            let s0 = sinr(ch, &p, r, 0);
            if best.as_ref().map_or(true, |(_, b)| s0 > *b) {
                best = Some((p, s0));
            }
        }
    }
    let Some((p, s0)) = best else {
        return Ok(PowerSolution::infeasible(2));
    };
    let pw = relay_power(ch, &p, r);
    Ok(PowerSolution {
        relay_power_active: (pw - p_r_max).abs() <= POWER_VERIFY_TOL * p_r_max.max(1.0),
        sinr_1: s0,
        p1_cap: if (p[0] - p_s_max).abs() < 1e-12 { P1Cap::SourceMax } else { P1Cap::RelayBudget },
        clamped: false,
        feasible: true,
        p,
    })
}
