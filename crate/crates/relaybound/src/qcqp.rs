//! Quadratic forms for the relay-optimization subproblems.
//!
//! Fixing source powers and SINR targets γ_2..γ_K for all users but the
//! first turns "maximize user 1's SINR over the relay matrix" into a
//! quadratically constrained quadratic program in the homogenized vector
//! `v = [vec(R); t]` (general relay, dimension M²+1) or
//! `y = [vec(S); t]` (neutralizing relay, dimension K²+1). This module
//! builds those constraint matrices exactly, applies the null-space
//! projection that eliminates the neutralization equality (restoring a
//! strictly feasible interior for the SDP relaxation), and inverts the
//! homogenization to recover a relay matrix from a solution vector.
//!
//! Every matrix built here is Hermitian, so the semidefinite relaxation
//! in [`crate::sdp`] can consume them directly.

use serde::{Deserialize, Serialize};

use crate::channel::{relay_q, ChannelRealization, RelayMatrix};
use crate::error::{Error, Result};
use crate::jsonfmt::{json_to_mat, mat_to_json, MatJson};
use crate::linalg::{checked_inverse, herm_eig, hermitian_part, kron, selection_matrices, unvec, vec};
use crate::neutralization::{q_tilde, relay_from_s, SMatrix};
use crate::sdp::{
    extract_vector, solve, ExtractOptions, Extraction, HermitianSdp, SdpStatus, Sense,
    SolveOptions, TraceConstraint,
};
use crate::{C64, CMat, CVec, RVec};

/// Which homogenized variable the instance is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QcqpKind {
    /// `v = [vec(R); t]`, unconstrained relay matrix.
    General,
    /// `y = [vec(S); t]`, relay constrained to neutralize interference.
    Neutralized,
}

/// `|t|` below this fraction of the solution norm means the homogenizing
/// scalar collapsed and no relay can be recovered.
pub const RECOVERY_T_TOL: f64 = 1e-9;

/// One target-SINR constraint `vᴴ num v ≥ γ · vᴴ den v`.
#[derive(Clone, Debug)]
pub struct SinrConstraint {
    /// 0-based user index (never 0; user 0 carries the objective).
    pub user: usize,
    pub target: f64,
    /// Signal quadratic form, power factor included.
    pub num: CMat,
    /// Interference-plus-noise quadratic form.
    pub den: CMat,
}

impl SinrConstraint {
    /// The single matrix whose quadratic form is nonnegative exactly when
    /// the SINR target is met: `num − γ · den`.
    pub fn combined(&self) -> CMat {
        &self.num - &self.den * C64::new(self.target, 0.0)
    }
}

/// A built relay-optimization instance, possibly projected onto the
/// neutralization null space.
#[derive(Clone, Debug)]
pub struct QcqpInstance {
    pub kind: QcqpKind,
    pub k: usize,
    pub m: usize,
    /// Length of the homogenized vector the matrices act on.
    pub dim: usize,
    /// Objective numerator (signal form of user 0, power included).
    pub objective_num: CMat,
    /// Objective denominator (interference-plus-noise form of user 0).
    pub objective_den: CMat,
    pub sinr_constraints: Vec<SinrConstraint>,
    /// Relay power form: `vᴴ P v ≤ 0` encodes `tr(R Q Rᴴ) ≤ P_r^max`.
    pub power_constraint: CMat,
    /// Neutralization equality `yᴴ D y = 0`; PSD of rank K²−K. Removed by
    /// [`project_null`].
    pub in_constraint: Option<CMat>,
    /// Basis of the neutralization null space once projected: original
    /// coordinates = projection · reduced coordinates.
    pub projection: Option<CMat>,
}

/// Rank-one Hermitian form `conj(c) cᵀ`, the matrix with
/// `vᴴ M v = |cᵀ v|²`.
fn abs_sq_form(c: &CVec) -> CMat {
    let n = c.len();
    CMat::from_fn(n, n, |i, j| c[i].conj() * c[j])
}

/// Homogenized linear coefficient of the S_l → D_j effective gain:
/// `h_jl + g_jrᴴ R g_rl = cᵀ [vec(R); t]` with `c = [g_rl ⊗ conj(g_jr); h_jl]`.
fn gain_coeff(ch: &ChannelRealization, j: usize, l: usize) -> CVec {
    let g_rl = CMat::from_column_slice(ch.m, 1, ch.g_rt.column(l).as_slice());
    let g_jr_conj = CMat::from_column_slice(ch.m, 1, ch.g_dr.column(j).as_slice()).conjugate();
    let a = kron(&g_rl, &g_jr_conj);
    let mut c = CVec::zeros(ch.m * ch.m + 1);
    c.rows_mut(0, ch.m * ch.m).copy_from(&a.column(0));
    c[ch.m * ch.m] = ch.h[(j, l)];
    c
}

/// Interference-plus-noise form of user `j` in the general problem:
/// cross-term rank-one forms weighted by the interferers' powers, plus
/// the relay-noise block `I ⊗ g_jr g_jrᴴ` and the unit receiver noise.
fn general_den(ch: &ChannelRealization, p: &RVec, j: usize) -> CMat {
    let n = ch.m * ch.m + 1;
    let mut den = CMat::zeros(n, n);
    for l in 0..ch.k {
        if l != j {
            den += abs_sq_form(&gain_coeff(ch, j, l)) * C64::new(p[l], 0.0);
        }
    }
    let g_jr = CMat::from_column_slice(ch.m, 1, ch.g_dr.column(j).as_slice());
    let noise = kron(&CMat::identity(ch.m, ch.m), &(&g_jr * g_jr.adjoint()));
    den.view_mut((0, 0), (ch.m * ch.m, ch.m * ch.m)).add_assign(&noise);
    den[(n - 1, n - 1)] += C64::new(1.0, 0.0);
    den
}

use std::ops::AddAssign;

/// Build the general-relay instance at fixed source powers: maximize user
/// 0's SINR subject to `sinr_j ≥ targets[j−1]` for the other users and
/// the relay power cap.
pub fn build_general(
    ch: &ChannelRealization,
    p: &RVec,
    targets: &[f64],
    p_r_max: f64,
) -> QcqpInstance {
    assert_eq!(targets.len(), ch.k - 1, "one target per user beyond the first");
    assert_eq!(p.len(), ch.k, "power vector length must equal K");
    let n = ch.m * ch.m + 1;
    let signal = |j: usize| abs_sq_form(&gain_coeff(ch, j, j)) * C64::new(p[j], 0.0);

    let mut sinr_constraints = Vec::with_capacity(ch.k - 1);
    for j in 1..ch.k {
        sinr_constraints.push(SinrConstraint {
            user: j,
            target: targets[j - 1],
            num: signal(j),
            den: general_den(ch, p, j),
        });
    }

    let mut power = CMat::zeros(n, n);
    let q_t = relay_q(ch, p).transpose();
    power
        .view_mut((0, 0), (ch.m * ch.m, ch.m * ch.m))
        .copy_from(&kron(&q_t, &CMat::identity(ch.m, ch.m)));
    power[(n - 1, n - 1)] = C64::new(-p_r_max, 0.0);

    QcqpInstance {
        kind: QcqpKind::General,
        k: ch.k,
        m: ch.m,
        dim: n,
        objective_num: signal(0),
        objective_den: general_den(ch, p, 0),
        sinr_constraints,
        power_constraint: power,
        in_constraint: None,
        projection: None,
    }
}

/// Build the neutralized-relay instance in `y = [vec(S); t]`. The
/// neutralization requirement rides along as the PSD equality
/// `yᴴ D y = 0`; use [`project_null`] before relaxing, since the equality
/// leaves the SDP without interior.
pub fn build_in(
    ch: &ChannelRealization,
    p: &RVec,
    targets: &[f64],
    p_r_max: f64,
) -> Result<QcqpInstance> {
    assert_eq!(targets.len(), ch.k - 1, "one target per user beyond the first");
    assert_eq!(p.len(), ch.k, "power vector length must equal K");
    let k = ch.k;
    let n = k * k + 1;
    let qt = q_tilde(ch, p)?;
    let g_rt_inv = checked_inverse(&ch.g_rt, "build_in: G_rt")?;
    // Relay-noise weight in S coordinates: conj(A Aᴴ) for A = G_rt⁻¹.
    let w = (&g_rt_inv * g_rt_inv.adjoint()).conjugate();

    // Signal gain of user i is h_ii + s_i, linear in the diagonal entry.
    let signal = |i: usize| {
        let mut c = CVec::zeros(n);
        c[i * k + i] = C64::new(1.0, 0.0);
        c[n - 1] = ch.h[(i, i)];
        abs_sq_form(&c) * C64::new(p[i], 0.0)
    };
    let den = |i: usize| {
        let mut e = CMat::zeros(k, k);
        e[(i, i)] = C64::new(1.0, 0.0);
        let mut d = CMat::zeros(n, n);
        d.view_mut((0, 0), (k * k, k * k)).copy_from(&kron(&w, &e));
        d[(n - 1, n - 1)] = C64::new(1.0, 0.0);
        d
    };

    let mut sinr_constraints = Vec::with_capacity(k - 1);
    for j in 1..k {
        sinr_constraints.push(SinrConstraint {
            user: j,
            target: targets[j - 1],
            num: signal(j),
            den: den(j),
        });
    }

    let mut power = CMat::zeros(n, n);
    power.view_mut((0, 0), (k * k, k * k)).copy_from(&qt);
    power[(n - 1, n - 1)] = C64::new(-p_r_max, 0.0);

    // Neutralization as a homogeneous PSD equality: with C = [T, T vec(H)],
    // yᴴ (Cᴴ C) y = ‖T vec(S) + t T vec(H)‖².
    let (t_sel, _) = selection_matrices(k);
    let t_vec_h = &t_sel * vec(&ch.h);
    let mut c_mat = CMat::zeros(k * k - k, n);
    c_mat.view_mut((0, 0), (k * k - k, k * k)).copy_from(&t_sel);
    c_mat.view_mut((0, k * k), (k * k - k, 1)).copy_from(&t_vec_h);
    let d4 = c_mat.adjoint() * &c_mat;

    Ok(QcqpInstance {
        kind: QcqpKind::Neutralized,
        k,
        m: ch.m,
        dim: n,
        objective_num: signal(0),
        objective_den: den(0),
        sinr_constraints,
        power_constraint: power,
        in_constraint: Some(d4),
        projection: None,
    })
}

/// Eliminate the neutralization equality by restricting every form to the
/// null space of its PSD matrix.
///
/// The equality `yᴴ D y = 0` with `D ⪰ 0` forces `y ∈ null(D)`, a
/// subspace of dimension K+1. Writing `y = V₀ x` for an orthonormal null
/// basis `V₀` and replacing every matrix `M` by `V₀ᴴ M V₀` yields an
/// equivalent problem of dimension K+1 whose relaxation has interior
/// points, which the equality-constrained original does not.
pub fn project_null(inst: &QcqpInstance) -> Result<QcqpInstance> {
    let d4 = inst.in_constraint.as_ref().ok_or_else(|| {
        Error::Dimension("project_null: instance has no neutralization constraint".into())
    })?;
    let k = inst.k;
    let expected_rank = k * k - k;
    let (vals, vecs) = herm_eig(d4);
    let lead = vals[0];
    if vals[expected_rank - 1] <= 1e-8 * lead || vals[expected_rank] >= 1e-9 * lead {
        return Err(Error::Singular {
            context: "project_null: neutralization matrix has unexpected rank",
            sigma_min: vals[expected_rank],
        });
    }
    let reduced = inst.dim - expected_rank;
    let v0 = CMat::from_fn(inst.dim, reduced, |i, j| vecs[(i, expected_rank + j)]);
    let compress = |m: &CMat| hermitian_part(&(v0.adjoint() * m * &v0));

    Ok(QcqpInstance {
        kind: inst.kind,
        k,
        m: inst.m,
        dim: reduced,
        objective_num: compress(&inst.objective_num),
        objective_den: compress(&inst.objective_den),
        sinr_constraints: inst
            .sinr_constraints
            .iter()
            .map(|c| SinrConstraint {
                user: c.user,
                target: c.target,
                num: compress(&c.num),
                den: compress(&c.den),
            })
            .collect(),
        power_constraint: compress(&inst.power_constraint),
        in_constraint: None,
        projection: Some(v0),
    })
}

/// Invert the homogenization: undo the projection if any, divide out the
/// homogenizing scalar, and reshape into a relay matrix (directly for the
/// general problem; through the S parameterization when neutralized,
/// scrubbing the pinned off-diagonal entries exactly).
pub fn recover_relay(
    solution: &CVec,
    inst: &QcqpInstance,
    ch: &ChannelRealization,
) -> Result<RelayMatrix> {
    assert_eq!(solution.len(), inst.dim, "solution length must match instance dim");
    let y = match &inst.projection {
        Some(v0) => v0 * solution,
        None => solution.clone(),
    };
    let n = y.len();
    let t = y[n - 1];
    if t.norm() <= RECOVERY_T_TOL * y.norm() {
        return Err(Error::RecoveryDegenerate { t: t.norm() });
    }
    let eta = y.rows(0, n - 1) / t;
    match inst.kind {
        QcqpKind::General => Ok(RelayMatrix::new(unvec(&eta.into_owned(), inst.m, inst.m))),
        QcqpKind::Neutralized => {
            let full = unvec(&eta.into_owned(), inst.k, inst.k);
            relay_from_s(ch, &SMatrix::from_full(ch, &full))
        }
    }
}

/// Result of one relay optimization: the matrix itself plus the relaxation
/// diagnostics needed to judge tightness downstream.
#[derive(Clone, Debug)]
pub struct RelayDesign {
    pub relay: RelayMatrix,
    /// Optimal value of the relaxation; an upper bound on the objective
    /// user's achievable SINR at these powers and targets.
    pub sdp_objective: f64,
    /// Objective ratio of the extracted vector certificate. Matches
    /// `sdp_objective` up to tolerance when the relaxation is tight.
    pub vector_objective: f64,
    pub extraction: Extraction,
    pub duality_gap: f64,
    pub iterations: usize,
}

/// Relax, solve, extract and rebuild: the full path from a built instance
/// to a relay matrix. Infeasible targets and solver breakdowns surface as
/// distinct error variants so sweeps can tell them apart.
pub fn optimize_relay(
    inst: &QcqpInstance,
    ch: &ChannelRealization,
    solve_opts: &SolveOptions,
    extract_opts: &ExtractOptions,
) -> Result<RelayDesign> {
    let sdp = inst.to_sdp();
    let sol = solve(&sdp, solve_opts);
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(Error::SdpInfeasible(format!(
                "targets unreachable at this power point (iterations {})",
                sol.iterations
            )));
        }
        SdpStatus::NumericalFailure => {
            return Err(Error::SdpNumericalFailure(format!(
                "solver stalled (gap {:.3e}, residual {:.3e})",
                sol.duality_gap, sol.primal_residual
            )));
        }
    }
    let out = extract_vector(&sdp, &sol, extract_opts)?;
    let relay = recover_relay(&out.v, inst, ch)?;
    let num = QcqpInstance::form(&inst.objective_num, &out.v);
    let den = QcqpInstance::form(&inst.objective_den, &out.v);
    Ok(RelayDesign {
        relay,
        sdp_objective: sol.objective,
        vector_objective: num / den,
        extraction: out.extraction,
        duality_gap: sol.duality_gap,
        iterations: sol.iterations,
    })
}

impl QcqpInstance {
    /// Charnes-Cooper relaxation: maximize `tr(num X)` with the
    /// denominator normalized to one, target and power forms as trace
    /// inequalities, and (if still present) the neutralization equality.
    pub fn to_sdp(&self) -> HermitianSdp {
        let mut constraints = vec![TraceConstraint {
            a: self.objective_den.clone(),
            sense: Sense::Eq,
            b: 1.0,
        }];
        for c in &self.sinr_constraints {
            constraints.push(TraceConstraint { a: c.combined(), sense: Sense::Ge, b: 0.0 });
        }
        constraints.push(TraceConstraint {
            a: self.power_constraint.clone(),
            sense: Sense::Le,
            b: 0.0,
        });
        if let Some(d4) = &self.in_constraint {
            constraints.push(TraceConstraint { a: d4.clone(), sense: Sense::Eq, b: 0.0 });
        }
        HermitianSdp::new(self.objective_num.clone(), constraints)
    }

    /// Quadratic-form value `vᴴ M v` (real for Hermitian M).
    pub fn form(m: &CMat, v: &CVec) -> f64 {
        v.dotc(&(m * v)).re
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&QcqpJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: QcqpJson = serde_json::from_str(text)?;
        dump.build()
    }
}

#[derive(Serialize, Deserialize)]
struct QcqpJson {
    kind: QcqpKind,
    k: usize,
    m: usize,
    dim: usize,
    objective_num: MatJson,
    objective_den: MatJson,
    sinr_constraints: Vec<(usize, f64, MatJson, MatJson)>,
    power_constraint: MatJson,
    in_constraint: Option<MatJson>,
    projection: Option<MatJson>,
}

impl From<&QcqpInstance> for QcqpJson {
    fn from(inst: &QcqpInstance) -> Self {
        QcqpJson {
            kind: inst.kind,
            k: inst.k,
            m: inst.m,
            dim: inst.dim,
            objective_num: mat_to_json(&inst.objective_num),
            objective_den: mat_to_json(&inst.objective_den),
            sinr_constraints: inst
                .sinr_constraints
                .iter()
                .map(|c| (c.user, c.target, mat_to_json(&c.num), mat_to_json(&c.den)))
                .collect(),
            power_constraint: mat_to_json(&inst.power_constraint),
            in_constraint: inst.in_constraint.as_ref().map(mat_to_json),
            projection: inst.projection.as_ref().map(mat_to_json),
        }
    }
}

impl QcqpJson {
    fn build(&self) -> Result<QcqpInstance> {
        Ok(QcqpInstance {
            kind: self.kind,
            k: self.k,
            m: self.m,
            dim: self.dim,
            objective_num: json_to_mat(&self.objective_num)?,
            objective_den: json_to_mat(&self.objective_den)?,
            sinr_constraints: {
                let mut v = Vec::with_capacity(self.sinr_constraints.len());
                for (user, target, num, den) in &self.sinr_constraints {
                    v.push(SinrConstraint {
                        user: *user,
                        target: *target,
                        num: json_to_mat(num)?,
                        den: json_to_mat(den)?,
                    });
                }
                v
            },
            power_constraint: json_to_mat(&self.power_constraint)?,
            in_constraint: match &self.in_constraint {
                Some(m) => Some(json_to_mat(m)?),
                None => None,
            },
            projection: match &self.projection {
                Some(m) => Some(json_to_mat(m)?),
                None => None,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, relay_power, sinr, sinr_in};
    use crate::linalg::rel_err;
    use crate::sdp::is_hermitian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_relay(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> RelayMatrix {
        RelayMatrix::new(CMat::from_fn(m, m, |_, _| {
            C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)) * scale
        }))
    }

    fn homogenize_r(r: &RelayMatrix) -> CVec {
        let m = r.dim();
        let mut v = CVec::zeros(m * m + 1);
        v.rows_mut(0, m * m).copy_from(&vec(&r.r));
        v[m * m] = C64::new(1.0, 0.0);
        v
    }

    fn homogenize_s(s: &SMatrix) -> CVec {
        let k = s.full.nrows();
        let mut y = CVec::zeros(k * k + 1);
        y.rows_mut(0, k * k).copy_from(&vec(&s.full));
        y[k * k] = C64::new(1.0, 0.0);
        y
    }

    fn random_s(ch: &ChannelRealization, rng: &mut ChaCha8Rng) -> SMatrix {
        let s = CVec::from_fn(ch.k, |_, _| {
            C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        SMatrix::new(ch, s)
    }

    #[test]
    fn general_matrices_are_hermitian() {
        let ch = draw_channel(2, 2, 30);
        let p = RVec::from_vec(vec![3.0, 7.0]);
        let inst = build_general(&ch, &p, &[1.5], 50.0);
        assert!(is_hermitian(&inst.objective_num));
        assert!(is_hermitian(&inst.objective_den));
        assert!(is_hermitian(&inst.power_constraint));
        for c in &inst.sinr_constraints {
            assert!(is_hermitian(&c.num));
            assert!(is_hermitian(&c.den));
        }
        assert_eq!(inst.dim, 5);
        // Homogenized power form keeps the budget in its corner.
        assert_eq!(inst.power_constraint[(4, 4)], C64::new(-50.0, 0.0));
    }

    #[test]
    fn general_forms_reproduce_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for seed in 0..30u64 {
            let ch = draw_channel(2, 2, seed);
            let p = RVec::from_vec(vec![rng.random_range(0.5..10.0), rng.random_range(0.5..10.0)]);
            let inst = build_general(&ch, &p, &[0.8], 20.0);
            let r = random_relay(&mut rng, 2, 1.0);
            let v = homogenize_r(&r);
            let got0 = QcqpInstance::form(&inst.objective_num, &v)
                / QcqpInstance::form(&inst.objective_den, &v);
            let want0 = sinr(&ch, &p, &r, 0);
            assert!((got0 - want0).abs() < 1e-9 * want0.max(1e-9), "user 0 seed {seed}");
            let c = &inst.sinr_constraints[0];
            let got1 = QcqpInstance::form(&c.num, &v) / QcqpInstance::form(&c.den, &v);
            let want1 = sinr(&ch, &p, &r, 1);
            assert!((got1 - want1).abs() < 1e-9 * want1.max(1e-9), "user 1 seed {seed}");
        }
    }

    #[test]
    fn general_power_form_matches_relay_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for seed in 0..20u64 {
            let ch = draw_channel(2, 2, seed);
            let p = RVec::from_vec(vec![2.0, 4.0]);
            let p_r_max = 9.0;
            let inst = build_general(&ch, &p, &[0.5], p_r_max);
            let r = random_relay(&mut rng, 2, 0.8);
            let v = homogenize_r(&r);
            let form = QcqpInstance::form(&inst.power_constraint, &v);
            let direct = relay_power(&ch, &p, &r) - p_r_max;
            assert!((form - direct).abs() < 1e-9 * direct.abs().max(1.0), "seed {seed}");
        }
    }

    #[test]
    fn sinr_constraint_sign_tracks_target() {
        let ch = draw_channel(2, 2, 33);
        let p = RVec::from_vec(vec![5.0, 5.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let r = random_relay(&mut rng, 2, 0.5);
        let v = homogenize_r(&r);
        let s1 = sinr(&ch, &p, &r, 1);
        for (target, expect_ok) in [(0.5 * s1, true), (2.0 * s1, false)] {
            let inst = build_general(&ch, &p, &[target], 50.0);
            let val = QcqpInstance::form(&inst.sinr_constraints[0].combined(), &v);
            assert_eq!(val >= 0.0, expect_ok);
        }
    }

    #[test]
    fn in_forms_reproduce_neutralized_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for seed in 0..30u64 {
            let ch = draw_channel(2, 2, seed);
            let p = RVec::from_vec(vec![rng.random_range(0.5..10.0), rng.random_range(0.5..10.0)]);
            let inst = build_in(&ch, &p, &[0.8], 20.0).unwrap();
            let s_mat = random_s(&ch, &mut rng);
            let r = relay_from_s(&ch, &s_mat).unwrap();
            let y = homogenize_s(&s_mat);
            let got0 = QcqpInstance::form(&inst.objective_num, &y)
                / QcqpInstance::form(&inst.objective_den, &y);
            let want0 = sinr_in(&ch, &p, &r, 0).unwrap();
            assert!((got0 - want0).abs() < 1e-9 * want0.max(1e-9), "user 0 seed {seed}");
            let c = &inst.sinr_constraints[0];
            let got1 = QcqpInstance::form(&c.num, &y) / QcqpInstance::form(&c.den, &y);
            let want1 = sinr_in(&ch, &p, &r, 1).unwrap();
            assert!((got1 - want1).abs() < 1e-9 * want1.max(1e-9), "user 1 seed {seed}");
        }
    }

    #[test]
    fn in_noise_chain_identity() {
        // The relay-noise power at D_j rewritten in S coordinates:
        // g_jrᴴ R Rᴴ g_jr = vec(S)ᴴ (conj(G_rt⁻¹G_rt⁻ᴴ) ⊗ e_j e_jᵀ) vec(S).
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for seed in 0..20u64 {
            let ch = draw_channel(2, 2, seed);
            let s_mat = random_s(&ch, &mut rng);
            let r = relay_from_s(&ch, &s_mat).unwrap();
            let g_rt_inv = checked_inverse(&ch.g_rt, "test").unwrap();
            let w = (&g_rt_inv * g_rt_inv.adjoint()).conjugate();
            let vs = vec(&s_mat.full);
            for j in 0..2 {
                let direct = ch.relay_row(&r, j).norm_squared();
                let mut e = CMat::zeros(2, 2);
                e[(j, j)] = C64::new(1.0, 0.0);
                let form = vs.dotc(&(kron(&w, &e) * &vs)).re;
                assert!(
                    (direct - form).abs() < 1e-9 * direct.max(1e-12),
                    "seed {seed} user {j}: ‖g_jrᴴR‖² {direct} vs form {form}"
                );
            }
        }
    }

    #[test]
    fn in_power_form_matches_relay_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for seed in 0..20u64 {
            let ch = draw_channel(2, 2, seed);
            let p = RVec::from_vec(vec![3.0, 1.0]);
            let p_r_max = 15.0;
            let inst = build_in(&ch, &p, &[0.5], p_r_max).unwrap();
            let s_mat = random_s(&ch, &mut rng);
            let r = relay_from_s(&ch, &s_mat).unwrap();
            let y = homogenize_s(&s_mat);
            let form = QcqpInstance::form(&inst.power_constraint, &y);
            let direct = relay_power(&ch, &p, &r) - p_r_max;
            assert!((form - direct).abs() < 1e-9 * direct.abs().max(1.0), "seed {seed}");
        }
    }

    #[test]
    fn neutralizing_s_annihilates_in_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let ch = draw_channel(2, 2, 39);
        let inst = build_in(&ch, &RVec::from_vec(vec![1.0, 1.0]), &[0.1], 5.0).unwrap();
        let d4 = inst.in_constraint.as_ref().unwrap();
        let scale = d4.norm();
        for _ in 0..10 {
            let s_mat = random_s(&ch, &mut rng);
            let y = homogenize_s(&s_mat);
            let val = QcqpInstance::form(d4, &y);
            assert!(val.abs() < 1e-12 * scale * y.norm_squared());
        }
        // A non-neutralizing S scores strictly positive.
        let mut bad = random_s(&ch, &mut rng);
        bad.full[(0, 1)] += C64::new(1.0, 0.0);
        let y = homogenize_s(&bad);
        assert!(QcqpInstance::form(d4, &y) > 0.5);
    }

    #[test]
    fn in_constraint_rank_is_k_squared_minus_k() {
        for seed in 0..20u64 {
            let ch = draw_channel(2, 2, seed);
            let inst = build_in(&ch, &RVec::from_vec(vec![1.0, 2.0]), &[0.3], 5.0).unwrap();
            let (vals, _) = herm_eig(inst.in_constraint.as_ref().unwrap());
            assert!(vals[1] > 1e-8 * vals[0], "rank at least 2");
            assert!(vals[2] < 1e-10 * vals[0], "nullity at least 3");
            assert!(vals[4] > -1e-12 * vals[0], "PSD");
        }
    }

    #[test]
    fn projection_reduces_to_k_plus_one() {
        let ch = draw_channel(2, 2, 40);
        let inst = build_in(&ch, &RVec::from_vec(vec![2.0, 2.0]), &[0.5], 10.0).unwrap();
        let proj = project_null(&inst).unwrap();
        assert_eq!(proj.dim, 3);
        assert!(proj.in_constraint.is_none());
        assert!(proj.projection.is_some());
        assert_eq!(proj.sinr_constraints.len(), 1);
        // K+1 constraints total: denominator normalization, one SINR
        // target, one power cap.
        assert_eq!(proj.to_sdp().constraints.len(), 3);
    }

    #[test]
    fn projection_preserves_values_on_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for seed in 0..20u64 {
            let ch = draw_channel(2, 2, seed);
            let p = RVec::from_vec(vec![4.0, 4.0]);
            let inst = build_in(&ch, &p, &[0.7], 10.0).unwrap();
            let proj = project_null(&inst).unwrap();
            let v0 = proj.projection.as_ref().unwrap();
            let s_mat = random_s(&ch, &mut rng);
            let y = homogenize_s(&s_mat);
            // y lies in the null space, so V₀ V₀ᴴ y = y and the reduced
            // coordinates x = V₀ᴴ y evaluate identically.
            let x = v0.adjoint() * &y;
            let back = v0 * &x;
            assert!((&back - &y).norm() < 1e-9 * y.norm(), "seed {seed}: not in null space");
            for (m_full, m_red) in [
                (&inst.objective_num, &proj.objective_num),
                (&inst.objective_den, &proj.objective_den),
                (&inst.power_constraint, &proj.power_constraint),
                (&inst.sinr_constraints[0].num, &proj.sinr_constraints[0].num),
                (&inst.sinr_constraints[0].den, &proj.sinr_constraints[0].den),
            ] {
                let full_val = QcqpInstance::form(m_full, &y);
                let red_val = QcqpInstance::form(m_red, &x);
                assert!(
                    (full_val - red_val).abs() < 1e-9 * full_val.abs().max(1.0),
                    "seed {seed}: {full_val} vs {red_val}"
                );
            }
        }
    }

    #[test]
    fn recover_general_roundtrip_and_scale_invariance() {
        let ch = draw_channel(2, 2, 42);
        let p = RVec::from_vec(vec![1.0, 1.0]);
        let inst = build_general(&ch, &p, &[0.5], 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let r = random_relay(&mut rng, 2, 1.0);
        let v = homogenize_r(&r);
        let back = recover_relay(&v, &inst, &ch).unwrap();
        assert!(rel_err(&back.r, &r.r) < 1e-12);
        let scaled = &v * C64::new(-2.0, 0.7);
        let back2 = recover_relay(&scaled, &inst, &ch).unwrap();
        assert!(rel_err(&back2.r, &r.r) < 1e-12);
    }

    #[test]
    fn recover_neutralized_through_projection() {
        let ch = draw_channel(2, 2, 44);
        let p = RVec::from_vec(vec![2.0, 3.0]);
        let inst = build_in(&ch, &p, &[0.4], 20.0).unwrap();
        let proj = project_null(&inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let s_mat = random_s(&ch, &mut rng);
        let r = relay_from_s(&ch, &s_mat).unwrap();
        let y = homogenize_s(&s_mat);
        let x = proj.projection.as_ref().unwrap().adjoint() * &y;
        let back = recover_relay(&x, &proj, &ch).unwrap();
        assert!(rel_err(&back.r, &r.r) < 1e-9);
        assert!(ch.in_residual(&back) < 1e-12);
    }

    #[test]
    fn recover_rejects_vanishing_t() {
        let ch = draw_channel(2, 2, 46);
        let inst = build_general(&ch, &RVec::from_vec(vec![1.0, 1.0]), &[0.5], 10.0);
        let mut v = CVec::zeros(5);
        v[0] = C64::new(1.0, 0.0);
        match recover_relay(&v, &inst, &ch) {
            Err(Error::RecoveryDegenerate { .. }) => {}
            other => panic!("expected degenerate recovery, got {other:?}"),
        }
    }

    #[test]
    fn pipeline_designs_relays_meeting_general_targets() {
        // Full chain on random channels: relax, solve, extract, rebuild,
        // then audit the relay against the channel model itself.
        let solve_opts = SolveOptions::default();
        let extract_opts = ExtractOptions::default();
        let mut done = 0;
        for seed in 0..10u64 {
            let ch = draw_channel(2, 2, 900 + seed);
            let p = RVec::from_vec(vec![5.0, 5.0]);
            let target = 0.8;
            let budget = 50.0;
            let inst = build_general(&ch, &p, &[target], budget);
            let design = match optimize_relay(&inst, &ch, &solve_opts, &extract_opts) {
                Ok(d) => d,
                // A target can be genuinely out of reach on a bad draw.
                Err(Error::SdpInfeasible(_)) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let r = &design.relay;

            let s0 = sinr(&ch, &p, r, 0);
            let s1 = sinr(&ch, &p, r, 1);
            let pw = relay_power(&ch, &p, r);
            assert!(s1 >= target * (1.0 - 1e-6), "seed {seed}: target missed, sinr_1 {s1}");
            assert!(pw <= budget * (1.0 + 1e-6), "seed {seed}: power {pw}");
            // The relaxation upper-bounds what any relay can do, and the
            // extracted relay should essentially attain it.
            assert!(
                s0 <= design.sdp_objective * (1.0 + 1e-5),
                "seed {seed}: achieved {s0} above bound {}",
                design.sdp_objective
            );
            assert!(
                design.sdp_objective - s0 <= 1e-4 * design.sdp_objective.max(1.0),
                "seed {seed}: loose extraction {} vs {}, via {:?}",
                s0,
                design.sdp_objective,
                design.extraction
            );
            done += 1;
        }
        assert!(done >= 8, "only {done} solvable general designs");
    }

    #[test]
    fn pipeline_designs_neutralizing_relays() {
        use crate::neutralization::check_in_feasibility;
        let solve_opts = SolveOptions::default();
        let extract_opts = ExtractOptions::default();
        let mut done = 0;
        for seed in 0..14u64 {
            let ch = draw_channel(2, 2, 950 + seed);
            let p = RVec::from_vec(vec![3.0, 3.0]);
            let report = check_in_feasibility(&ch, &p, f64::INFINITY).unwrap();
            // Generous headroom above the cheapest neutralizing relay.
            let budget = 4.0 * report.min_power;
            let target = 0.5;
            let inst = build_in(&ch, &p, &[target], budget).unwrap();
            let proj = project_null(&inst).unwrap();
            let design = match optimize_relay(&proj, &ch, &solve_opts, &extract_opts) {
                Ok(d) => d,
                Err(Error::SdpInfeasible(_)) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let r = &design.relay;

            assert!(ch.in_residual(r) <= 1e-8 * ch.max_direct_gain(), "seed {seed}");
            let s0 = sinr_in(&ch, &p, r, 0).unwrap();
            let s1 = sinr_in(&ch, &p, r, 1).unwrap();
            let pw = relay_power(&ch, &p, r);
            assert!(s1 >= target * (1.0 - 1e-6), "seed {seed}: sinr_1 {s1}");
            assert!(pw <= budget * (1.0 + 1e-6), "seed {seed}: power {pw} vs {budget}");
            assert!(
                design.sdp_objective - s0 <= 1e-4 * design.sdp_objective.max(1.0),
                "seed {seed}: loose extraction {} vs {} via {:?}",
                s0,
                design.sdp_objective,
                design.extraction
            );
            done += 1;
        }
        assert!(done >= 10, "only {done} feasible neutralized designs");
    }

    #[test]
    fn json_roundtrip() {
        let ch = draw_channel(2, 2, 47);
        let inst = build_in(&ch, &RVec::from_vec(vec![1.0, 2.0]), &[0.6], 8.0).unwrap();
        let proj = project_null(&inst).unwrap();
        let text = proj.to_json().unwrap();
        let back = QcqpInstance::from_json(&text).unwrap();
        assert_eq!(back.kind, proj.kind);
        assert_eq!(back.dim, proj.dim);
        assert_eq!(back.objective_num, proj.objective_num);
        assert_eq!(back.power_constraint, proj.power_constraint);
        assert_eq!(back.projection, proj.projection);
    }
}
