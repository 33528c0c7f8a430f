//! Interference neutralization through the relay.
//!
//! With M = K relay antennas, choosing the relay matrix R to cancel every
//! cross link `h_ij + g_irᴴ R g_rj = 0 (i ≠ j)` turns the interference
//! channel into K parallel point-to-point links. The cancellation
//! constraints pin the off-diagonal entries of `S = G_drᴴ R G_rt` to
//! `−h_ij`, leaving the K diagonal entries free; this module carries that
//! parameterization, the quadratic form expressing relay power directly in
//! `vec(S)`, the closed-form feasibility test against the relay power
//! budget, and the minimum-power neutralizing relay.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, RelayMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    checked_inverse, herm_eig, kron, null_space, pinv, selection_matrices, unvec, vec,
    DEFAULT_REL_TOL,
};
use crate::{C64, CMat, CVec, RVec};

/// Absolute slack on the feasibility comparison, absorbing
/// eigendecomposition noise; boundary cases count as feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// The neutralization parameterization `S = G_drᴴ R G_rt`: off-diagonal
/// entries are pinned to `−h_ij`, the diagonal `s` is free.
#[derive(Clone, Debug, PartialEq)]
pub struct SMatrix {
    /// Free diagonal, length K.
    pub s: CVec,
    /// Full K×K matrix: diagonal from `s`, off-diagonal (i,j) = −h_ij.
    pub full: CMat,
}

impl SMatrix {
    /// Build from a free diagonal; off-diagonals come from the channel.
    pub fn new(ch: &ChannelRealization, s: CVec) -> Self {
        assert_eq!(s.len(), ch.k, "diagonal length must equal K");
        let full = CMat::from_fn(ch.k, ch.k, |i, j| if i == j { s[i] } else { -ch.h[(i, j)] });
        SMatrix { s, full }
    }

    /// Extract the diagonal of `full` and rebuild with exact off-diagonal
    /// pins, scrubbing any numerical drift in the off-diagonal entries.
    pub fn from_full(ch: &ChannelRealization, full: &CMat) -> Self {
        let s = CVec::from_fn(ch.k, |i, _| full[(i, i)]);
        SMatrix::new(ch, s)
    }
}

/// Outcome of the neutralization feasibility test.
///
/// `min_power` is the smallest relay transmit power any neutralizing relay
/// matrix needs at source powers `p`; neutralization is feasible exactly
/// when it fits the budget. The factor `F` and the split of the coordinate
/// vector into a particular part `x_h` and a free null-space component let
/// callers enumerate every neutralizing S: `vec(S) = F (x_h + basis_xn z)`
/// with relay power `‖x_h‖² + ‖z‖²`... the two parts are orthogonal.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ReportJson", into = "ReportJson")]
pub struct InFeasibilityReport {
    pub feasible: bool,
    /// Minimum relay power any neutralizing relay needs.
    pub min_power: f64,
    /// The relay power cap the test was run against.
    pub budget: f64,
    /// Minimum-norm coordinates meeting the neutralization constraints.
    pub x_h: CVec,
    /// Orthonormal basis (columns) of the free directions; K of them.
    pub basis_xn: CMat,
    /// Whitening factor with `F Fᴴ = Q̃⁻¹`; maps coordinates to `vec(S)`.
    pub f: CMat,
}

/// The K²×K² Hermitian positive definite matrix Q̃ with
/// `vec(S)ᴴ Q̃ vec(S) = tr(R Q Rᴴ)` whenever `R` is the relay matrix
/// reproducing `S` (see [`relay_from_s`]).
///
/// `Q̃ = (diag(p) + G_rt⁻* G_rt⁻ᵀ) ⊗ (G_dr⁻¹ G_dr⁻ᴴ)`.
pub fn q_tilde(ch: &ChannelRealization, p: &RVec) -> Result<CMat> {
    require_square(ch)?;
    assert_eq!(p.len(), ch.k, "power vector length must equal K");
    let g_rt_inv = checked_inverse(&ch.g_rt, "q_tilde: G_rt")?;
    let g_dr_inv = checked_inverse(&ch.g_dr, "q_tilde: G_dr")?;
    // G_rt⁻* G_rt⁻ᵀ = conj(A Aᴴ) for A = G_rt⁻¹, Hermitian.
    let left_tail = (&g_rt_inv * g_rt_inv.adjoint()).conjugate();
    let mut left = left_tail;
    for j in 0..ch.k {
        left[(j, j)] += C64::new(p[j], 0.0);
    }
    let right = &g_dr_inv * g_dr_inv.adjoint();
    Ok(kron(&left, &right))
}

/// The unique relay matrix with `G_drᴴ R G_rt = S`, i.e.
/// `R = G_dr⁻ᴴ S G_rt⁻¹`.
pub fn relay_from_s(ch: &ChannelRealization, s_mat: &SMatrix) -> Result<RelayMatrix> {
    require_square(ch)?;
    let g_rt_inv = checked_inverse(&ch.g_rt, "relay_from_s: G_rt")?;
    let g_dr_inv = checked_inverse(&ch.g_dr, "relay_from_s: G_dr")?;
    Ok(RelayMatrix::new(g_dr_inv.adjoint() * &s_mat.full * g_rt_inv))
}

/// Decide whether interference neutralization fits the relay power budget
/// at source powers `p`, and if so with how much to spare.
///
/// Writing `Q̃ = V Γ Vᴴ` and `F = V Γ^{-1/2}` (so `F Fᴴ = Q̃⁻¹`), the
/// substitution `vec(S) = F x` makes the relay power plain `‖x‖²`, and the
/// neutralization constraints become the affine system
/// `(T F) x = −T vec(H)` with T the off-diagonal selector. The minimum
/// power is reached at the least-squares point `x_h = −(T F)⁺ T vec(H)`,
/// and any multiple of the K free directions in `null(T F)` can be added
/// without disturbing neutralization.
pub fn check_in_feasibility(
    ch: &ChannelRealization,
    p: &RVec,
    p_r_max: f64,
) -> Result<InFeasibilityReport> {
    let qt = q_tilde(ch, p)?;
    let k = ch.k;
    let (gamma, v) = herm_eig(&qt);
    if gamma[k * k - 1] <= 0.0 {
        return Err(Error::Singular {
            context: "check_in_feasibility: Q̃ not positive definite",
            sigma_min: gamma[k * k - 1],
        });
    }
    let mut f = v.clone();
    for j in 0..k * k {
        let scale = C64::new(1.0 / gamma[j].sqrt(), 0.0);
        f.column_mut(j).scale_mut(scale.re);
    }
    let (t, _) = selection_matrices(k);
    let t_vec_h = &t * vec(&ch.h);
    let tf = &t * &f;

    // min over neutralizing S of vec(S)ᴴ Q̃ vec(S) equals
    // (T vec H)ᴴ (T Q̃⁻¹ Tᴴ)⁻¹ (T vec H); with A = (TF)(TF)ᴴ = T Q̃⁻¹ Tᴴ
    // solve A z = T vec H by Cholesky, falling back to the pseudo-inverse
    // if the quadratic form is numerically semidefinite.
    let a = &tf * tf.adjoint();
    let z = match a.clone().cholesky() {
        Some(chol) => chol.solve(&t_vec_h),
        None => pinv(&a, DEFAULT_REL_TOL) * &t_vec_h,
    };
    let min_power = t_vec_h.dotc(&z).re;

    let x_h = -(pinv(&tf, DEFAULT_REL_TOL) * &t_vec_h);
    let basis_xn = null_space(&tf, DEFAULT_REL_TOL);
    if basis_xn.ncols() != k {
        return Err(Error::Singular {
            context: "check_in_feasibility: degenerate neutralization system",
            sigma_min: 0.0,
        });
    }
    Ok(InFeasibilityReport {
        feasible: min_power <= p_r_max + FEASIBILITY_SLACK,
        min_power,
        budget: p_r_max,
        x_h,
        basis_xn,
        f,
    })
}

/// The minimum-power neutralizing relay from a feasible report: the free
/// component is set to zero, so `vec(S) = F x_h`.
pub fn minimal_in_relay(
    report: &InFeasibilityReport,
    ch: &ChannelRealization,
) -> Result<(SMatrix, RelayMatrix)> {
    if !report.feasible {
        return Err(Error::InfeasibleNeutralization {
            min_power: report.min_power,
            budget: report.budget,
        });
    }
    let vec_s = &report.f * &report.x_h;
    let full = unvec(&vec_s, ch.k, ch.k);
    let s_mat = SMatrix::from_full(ch, &full);
    let r = relay_from_s(ch, &s_mat)?;
    Ok((s_mat, r))
}

fn require_square(ch: &ChannelRealization) -> Result<()> {
    if ch.m != ch.k {
        return Err(Error::AntennaMismatch { antennas: ch.m, users: ch.k });
    }
    Ok(())
}

// JSON mirror with [re, im] pairs, column-major for matrices.
#[derive(Serialize, Deserialize)]
struct ReportJson {
    feasible: bool,
    min_power: f64,
    budget: f64,
    x_h: Vec<[f64; 2]>,
    basis_xn: MatJson,
    f: MatJson,
}

use crate::jsonfmt::{cvec_to_json, json_to_cvec, json_to_mat, mat_to_json, MatJson};

impl From<InFeasibilityReport> for ReportJson {
    fn from(r: InFeasibilityReport) -> Self {
        ReportJson {
            feasible: r.feasible,
            min_power: r.min_power,
            budget: r.budget,
            x_h: cvec_to_json(&r.x_h),
            basis_xn: mat_to_json(&r.basis_xn),
            f: mat_to_json(&r.f),
        }
    }
}

impl TryFrom<ReportJson> for InFeasibilityReport {
    type Error = Error;

    fn try_from(j: ReportJson) -> Result<Self> {
        Ok(InFeasibilityReport {
            feasible: j.feasible,
            min_power: j.min_power,
            budget: j.budget,
            x_h: json_to_cvec(&j.x_h),
            basis_xn: json_to_mat(&j.basis_xn)?,
            f: json_to_mat(&j.f)?,
        })
    }
}
