//! Hermitian semidefinite programming: problem type, a dense primal-dual
//! interior-point solver over the real symmetric embedding, rank-one
//! extraction and Gaussian randomization.
//!
//! Problems are stated as maximize `tr(C X)` over Hermitian `X ⪰ 0`
//! subject to trace constraints `tr(A_i X) {=, ≤, ≥} b_i`. Dimensions stay
//! tiny here (n ≤ ~20 complex), so everything is dense and the solver
//! favors robustness over scale.

mod ipm;

pub use ipm::{solve, SolveOptions};

use serde::{Deserialize, Serialize};

use crate::jsonfmt::{json_to_mat, mat_to_json, MatJson};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, hermitian_part, null_space};
use crate::{C64, CMat, CVec, RVec};

/// Direction of one trace constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// One constraint `tr(A X) sense b` with Hermitian `A`.
#[derive(Clone, Debug)]
pub struct TraceConstraint {
    pub a: CMat,
    pub sense: Sense,
    pub b: f64,
}

/// Maximize `tr(C X)` subject to trace constraints and `X ⪰ 0`.
#[derive(Clone, Debug)]
pub struct HermitianSdp {
    pub n: usize,
    pub c: CMat,
    pub constraints: Vec<TraceConstraint>,
}

impl HermitianSdp {
    pub fn new(c: CMat, constraints: Vec<TraceConstraint>) -> Self {
        let n = c.nrows();
        assert_eq!(c.ncols(), n, "objective must be square");
        debug_assert!(is_hermitian(&c), "objective must be Hermitian");
        for con in &constraints {
            assert_eq!(con.a.shape(), (n, n), "constraint dimension mismatch");
            debug_assert!(is_hermitian(&con.a), "constraint matrices must be Hermitian");
        }
        HermitianSdp { n, c, constraints }
    }

    /// Real part of `tr(A X)`; the imaginary part vanishes when both are
    /// Hermitian.
    pub fn trace_of(a: &CMat, x: &CMat) -> f64 {
        (a * x).trace().re
    }

    /// Worst violation of the constraint set at `x` (0 when feasible).
    pub fn violation(&self, x: &CMat) -> f64 {
        let mut worst: f64 = 0.0;
        for con in &self.constraints {
            let v = Self::trace_of(&con.a, x);
            let gap = match con.sense {
                Sense::Eq => (v - con.b).abs(),
                Sense::Le => (v - con.b).max(0.0),
                Sense::Ge => (con.b - v).max(0.0),
            };
            worst = worst.max(gap);
        }
        worst
    }
}

pub(crate) fn is_hermitian(a: &CMat) -> bool {
    (a - a.adjoint()).norm() <= 1e-12 * a.norm().max(1.0)
}

/// How the solver terminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// How a vector solution was obtained from the matrix solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extraction {
    /// Second eigenvalue negligible; principal eigenvector is exact.
    RankOneExact,
    /// Purification inside the optimal face reached a rank-one point.
    RankReduced,
    /// Gaussian randomization produced the best feasible candidate.
    Randomized,
}

impl std::fmt::Display for Extraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Extraction::RankOneExact => "rank_one_exact",
            Extraction::RankReduced => "rank_reduced",
            Extraction::Randomized => "randomized",
        })
    }
}

/// Solver output: the PSD matrix, its objective value and quality numbers.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: CMat,
    pub objective: f64,
    pub status: SdpStatus,
    /// Eigenvalue count above `rank_ratio · λ_max`.
    pub rank: usize,
    pub duality_gap: f64,
    /// Worst primal constraint violation at `x`.
    pub primal_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// Eigenvalues of the solution matrix, descending.
    pub fn eigenvalues(&self) -> crate::RVec {
        herm_eig(&self.x).0
    }
}

// Instance dump/restore so failing solves can be replayed in isolation.
#[derive(Serialize, Deserialize)]
struct SdpJson {
    c: MatJson,
    constraints: Vec<(MatJson, Sense, f64)>,
}

impl HermitianSdp {
    pub fn to_json(&self) -> Result<String> {
        let dump = SdpJson {
            c: mat_to_json(&self.c),
            constraints: self
                .constraints
                .iter()
                .map(|con| (mat_to_json(&con.a), con.sense, con.b))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: SdpJson = serde_json::from_str(text)?;
        let c = json_to_mat(&dump.c)?;
        let mut constraints = Vec::with_capacity(dump.constraints.len());
        for (a, sense, b) in &dump.constraints {
            constraints.push(TraceConstraint { a: json_to_mat(a)?, sense: *sense, b: *b });
        }
        if c.nrows() != c.ncols() {
            return Err(Error::Dimension("objective must be square".into()));
        }
        Ok(HermitianSdp::new(c, constraints))
    }
}

/// Principal eigenvector scaled by `√λ_max`: the exact vector solution
/// when the matrix is rank one.
pub fn principal_vector(x: &CMat) -> CVec {
    let (vals, vecs) = herm_eig(x);
    let lead = vals[0].max(0.0).sqrt();
    let mut v = CVec::from_column_slice(vecs.column(0).as_slice());
    v.scale_mut(lead);
    v
}

fn qform(a: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// Whether `v vᴴ` satisfies every constraint, with slack proportional to
/// the natural magnitude of each quadratic form.
fn vector_feasible(sdp: &HermitianSdp, v: &CVec, tol: f64) -> bool {
    let scale = v.norm_squared();
    for con in &sdp.constraints {
        let val = qform(&con.a, v);
        let slack = tol * (1.0 + con.b.abs() + con.a.norm() * scale);
        let ok = match con.sense {
            Sense::Eq => (val - con.b).abs() <= slack,
            Sense::Le => val <= con.b + slack,
            Sense::Ge => val >= con.b - slack,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// One real row of the face-restricted linear system: the coefficients of
/// `tr(M Δ)` in the parameterization of Hermitian `Δ` by its diagonal and
/// the real/imaginary parts of its strict upper triangle.
fn face_row(m: &CMat, r: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(r * r);
    for j in 0..r {
        row.push(m[(j, j)].re);
    }
    for j in 0..r {
        for k in (j + 1)..r {
            row.push(2.0 * m[(j, k)].re);
            row.push(2.0 * m[(j, k)].im);
        }
    }
    row
}

fn delta_from_params(p: &[f64], r: usize) -> CMat {
    let mut d = CMat::zeros(r, r);
    for j in 0..r {
        d[(j, j)] = C64::new(p[j], 0.0);
    }
    let mut idx = r;
    for j in 0..r {
        for k in (j + 1)..r {
            let z = C64::new(p[idx], p[idx + 1]);
            d[(j, k)] = z;
            d[(k, j)] = z.conj();
            idx += 2;
        }
    }
    d
}

/// Turn the solver's PSD matrix into a vector solution without leaving the
/// optimal face. Exact when the matrix is already numerically rank one;
/// otherwise walks along directions that keep every constraint value and
/// the objective fixed, shedding one eigenvalue per step. Returns `None`
/// when the face pins a higher-rank point, in which case randomization is
/// the remaining option.
pub fn extract_rank_one(
    sdp: &HermitianSdp,
    sol: &SdpSolution,
    rank_ratio: f64,
    feas_tol: f64,
) -> Option<(CVec, Extraction)> {
    let (vals, vecs) = herm_eig(&sol.x);
    if vals[0] <= 0.0 {
        return None;
    }
    if sdp.n == 1 || vals[1] <= rank_ratio * vals[0] {
        let v = principal_vector(&sol.x);
        if vector_feasible(sdp, &v, feas_tol) {
            return Some((v, Extraction::RankOneExact));
        }
        return None;
    }

    let mut r = vals.iter().take_while(|&&l| l > rank_ratio * vals[0]).count();
    let mut p = vecs.columns(0, r).into_owned();
    let mut lam = RVec::from_fn(r, |i, _| vals[i]);

    for _ in 0..sdp.n + 1 {
        if r == 1 {
            let v = &p * C64::new(lam[0].sqrt(), 0.0);
            let v = CVec::from_column_slice(v.as_slice());
            if vector_feasible(sdp, &v, feas_tol) {
                return Some((v, Extraction::RankReduced));
            }
            return None;
        }

        // All constraint values plus the objective must stay fixed, which
        // confines Δ to the null space of one real row per matrix.
        let mut rows = Vec::with_capacity(sdp.constraints.len() + 1);
        rows.push(face_row(&(p.adjoint() * &sdp.c * &p), r));
        for con in &sdp.constraints {
            rows.push(face_row(&(p.adjoint() * &con.a * &p), r));
        }
        let sys = CMat::from_fn(rows.len(), r * r, |i, j| C64::new(rows[i][j], 0.0));
        let null = null_space(&sys, 1e-10);
        if null.ncols() == 0 {
            return None;
        }
        // The system is real, so the null column's real and imaginary
        // parts are separately valid; take the larger.
        let col = null.column(0);
        let re: Vec<f64> = col.iter().map(|z| z.re).collect();
        let im: Vec<f64> = col.iter().map(|z| z.im).collect();
        let re_n: f64 = re.iter().map(|x| x * x).sum();
        let im_n: f64 = im.iter().map(|x| x * x).sum();
        let params = if re_n >= im_n { re } else { im };
        let delta = delta_from_params(&params, r);

        // Step to the cone boundary of Λ + tΔ along the shorter side.
        let half = CMat::from_fn(r, r, |i, j| {
            delta[(i, j)] / C64::new((lam[i] * lam[j]).sqrt(), 0.0)
        });
        let (phi, _) = herm_eig(&hermitian_part(&half));
        let hi = phi[0];
        let lo = phi[r - 1];
        if hi.max(-lo) <= 1e-12 {
            return None;
        }
        let t = if hi >= -lo { -1.0 / hi } else { -1.0 / lo };

        let shifted = CMat::from_fn(r, r, |i, j| {
            let base = if i == j { C64::new(lam[i], 0.0) } else { C64::new(0.0, 0.0) };
            base + delta[(i, j)] * C64::new(t, 0.0)
        });
        let (svals, svecs) = herm_eig(&shifted);
        let keep = svals.iter().take_while(|&&l| l > 1e-9 * svals[0].max(1e-300)).count();
        if keep == 0 || keep >= r {
            return None;
        }
        p = &p * svecs.columns(0, keep).into_owned();
        lam = RVec::from_fn(keep, |i, _| svals[i]);
        r = keep;
    }
    None
}

/// Gaussian randomization: draw `v = X^{1/2} g` with `g ~ CN(0, I)`,
/// rescale each draw onto the inhomogeneous equality row, keep the best
/// feasible candidate. Scale-invariant rows (`b = 0`) pass or fail as
/// drawn. Returns the winning vector and its objective value.
pub fn randomize(
    sdp: &HermitianSdp,
    sol: &SdpSolution,
    draws: usize,
    seed: u64,
    feas_tol: f64,
) -> Option<(CVec, f64)> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    let (vals, vecs) = herm_eig(&sol.x);
    if vals[0] <= 0.0 {
        return None;
    }
    let root = CMat::from_fn(sdp.n, sdp.n, |i, j| {
        vecs[(i, j)] * C64::new(vals[j].max(0.0).sqrt(), 0.0)
    });
    // vᴴ A v scales freely, so exactly one equality row with b > 0 can
    // anchor the magnitude of each draw.
    let anchor = sdp
        .constraints
        .iter()
        .find(|con| con.sense == Sense::Eq && con.b > 0.0)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(CVec, f64)> = None;
    for _ in 0..draws {
        let g = CVec::from_fn(sdp.n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let mut v = &root * g;
        let q = qform(&anchor.a, &v);
        if q <= 1e-12 * anchor.a.norm() * v.norm_squared() {
            continue;
        }
        v.scale_mut((anchor.b / q).sqrt());
        if !vector_feasible(sdp, &v, feas_tol) {
            continue;
        }
        let obj = qform(&sdp.c, &v);
        if best.as_ref().map_or(true, |(_, b)| obj > *b) {
            best = Some((v, obj));
        }
    }
    best
}

/// A vector certificate for the SDP: `v vᴴ` is (near-)feasible and its
/// objective is reported alongside how it was obtained.
#[derive(Clone, Debug)]
pub struct VectorSolution {
    pub v: CVec,
    pub objective: f64,
    pub extraction: Extraction,
}

/// Extraction knobs: rank test ratio, feasibility slack for candidate
/// vectors, and the randomization fallback's draw count and RNG seed.
#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    pub rank_ratio: f64,
    pub feas_tol: f64,
    pub draws: usize,
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { rank_ratio: 1e-6, feas_tol: 1e-6, draws: 200, seed: 0 }
    }
}

/// Full extraction pipeline: exact rank-one or face purification first,
/// Gaussian randomization as fallback.
pub fn extract_vector(
    sdp: &HermitianSdp,
    sol: &SdpSolution,
    opts: &ExtractOptions,
) -> Result<VectorSolution> {
    if sol.status != SdpStatus::Optimal {
        return Err(Error::SdpNumericalFailure(
            "vector extraction needs an optimal solve".into(),
        ));
    }
    if let Some((v, extraction)) = extract_rank_one(sdp, sol, opts.rank_ratio, opts.feas_tol) {
        let objective = qform(&sdp.c, &v);
        return Ok(VectorSolution { v, objective, extraction });
    }
    if let Some((v, objective)) = randomize(sdp, sol, opts.draws, opts.seed, opts.feas_tol) {
        return Ok(VectorSolution { v, objective, extraction: Extraction::Randomized });
    }
    Err(Error::SdpNumericalFailure(
        "no feasible vector from purification or randomization".into(),
    ))
}
