//! Channel realizations and physical-layer quantities.
//!
//! One [`ChannelRealization`] fixes the K-user interference channel and the
//! M-antenna relay links. All powers are noise-normalized: noise variance
//! is 1 at the relay and at every destination, so transmit powers are SNRs
//! and dB conversion is the caller's business.
//!
//! Indices are 0-based throughout: user `j` means the pair (S_j, D_j).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, RVec};

/// Tolerance for treating a relay matrix as interference-neutralizing:
/// the largest cross-link residual |h_ij + g_irᴴ R g_rj| must stay below
/// this factor times max|h|. Well above linear-algebra noise, far below
/// any physical interference level.
pub const IN_RESIDUAL_REL_TOL: f64 = 1e-6;

/// One draw of the channel: direct links, source→relay links and
/// relay→destination links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct ChannelRealization {
    /// Number of source/destination pairs.
    pub k: usize,
    /// Number of relay antennas.
    pub m: usize,
    /// K×K direct channel; entry (j, l) is h_{jl}, the gain from S_l to D_j.
    pub h: CMat,
    /// M×K source→relay channel; column l is g_{rl}, the vector from S_l
    /// to the relay array.
    pub g_rt: CMat,
    /// M×K relay→destination channel; column j is g_{jr}, used as g_{jr}ᴴ
    /// on the relay output towards D_j.
    pub g_dr: CMat,
}

/// The relay's M×M linear processing matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::jsonfmt::MatJson", into = "crate::jsonfmt::MatJson")]
pub struct RelayMatrix {
    pub r: CMat,
}

impl TryFrom<crate::jsonfmt::MatJson> for RelayMatrix {
    type Error = Error;
    fn try_from(j: crate::jsonfmt::MatJson) -> Result<Self> {
        let r = crate::jsonfmt::json_to_mat(&j)?;
        if r.nrows() != r.ncols() {
            return Err(Error::Dimension(format!(
                "relay matrix must be square, got {}×{}",
                r.nrows(),
                r.ncols()
            )));
        }
        Ok(RelayMatrix { r })
    }
}

impl From<RelayMatrix> for crate::jsonfmt::MatJson {
    fn from(r: RelayMatrix) -> Self {
        crate::jsonfmt::mat_to_json(&r.r)
    }
}

impl RelayMatrix {
    pub fn new(r: CMat) -> Self {
        assert_eq!(r.nrows(), r.ncols(), "relay matrix must be square");
        RelayMatrix { r }
    }

    /// The all-zero relay (relay switched off; plain interference channel).
    pub fn zero(m: usize) -> Self {
        RelayMatrix { r: CMat::zeros(m, m) }
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }
}

/// Source and relay power limits together with one operating point `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    /// Per-source transmit power cap (same for every user).
    pub p_s_max: f64,
    /// Relay transmit power cap.
    pub p_r_max: f64,
    /// Current source powers, length K, each in [0, p_s_max].
    pub p: Vec<f64>,
}

impl PowerBudget {
    pub fn new(p_s_max: f64, p_r_max: f64, p: Vec<f64>) -> Result<Self> {
        if !(p_s_max >= 0.0) || !(p_r_max >= 0.0) {
            return Err(Error::Config("power caps must be nonnegative".into()));
        }
        if p.iter().any(|&x| !(0.0..=p_s_max * (1.0 + 1e-12)).contains(&x)) {
            return Err(Error::Config(format!(
                "source powers must lie in [0, {p_s_max}], got {p:?}"
            )));
        }
        Ok(PowerBudget { p_s_max, p_r_max, p })
    }

    /// Every source at full power, the default operating point.
    pub fn full_power(k: usize, p_s_max: f64, p_r_max: f64) -> Self {
        PowerBudget { p_s_max, p_r_max, p: vec![p_s_max; k] }
    }

    pub fn p_vec(&self) -> RVec {
        RVec::from_vec(self.p.clone())
    }
}

fn draw_cn01<R: Rng>(rng: &mut R) -> C64 {
    // Circularly symmetric CN(0,1): real and imaginary parts each N(0, 1/2).
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn draw_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Column-major fill order, fixed so a seed pins the realization.
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = draw_cn01(rng);
        }
    }
    m
}

/// Draw one i.i.d. CN(0,1) channel realization, deterministic in the seed.
pub fn draw_channel(k: usize, m: usize, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_channel_with(&mut rng, k, m)
}

/// Same as [`draw_channel`] but advancing a caller-owned RNG.
pub fn draw_channel_with<R: Rng>(rng: &mut R, k: usize, m: usize) -> ChannelRealization {
    assert!(k >= 1 && m >= 1, "need at least one user and one antenna");
    ChannelRealization {
        k,
        m,
        h: draw_cmat(rng, k, k),
        g_rt: draw_cmat(rng, m, k),
        g_dr: draw_cmat(rng, m, k),
    }
}

impl ChannelRealization {
    /// Effective gain from S_l to D_j through direct path plus relay:
    /// `h_jl + g_jrᴴ R g_rl`.
    pub fn effective_gain(&self, r: &RelayMatrix, j: usize, l: usize) -> C64 {
        let g_jr = self.g_dr.column(j);
        let g_rl = self.g_rt.column(l);
        self.h[(j, l)] + (g_jr.adjoint() * &r.r * g_rl)[(0, 0)]
    }

    /// Row vector `g_jrᴴ R` as a length-M vector (conjugated entries).
    pub fn relay_row(&self, r: &RelayMatrix, j: usize) -> CVec {
        (self.g_dr.column(j).adjoint() * &r.r).transpose()
    }

    /// Largest cross-link residual `max_{i≠j} |h_ij + g_irᴴ R g_rj|`;
    /// zero exactly when R neutralizes all interference.
    pub fn in_residual(&self, r: &RelayMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                if i != j {
                    worst = worst.max(self.effective_gain(r, i, j).norm());
                }
            }
        }
        worst
    }

    /// Largest direct-gain magnitude; the reference scale for deciding
    /// whether residual cross talk counts as neutralized.
    pub fn max_direct_gain(&self) -> f64 {
        self.h.iter().map(|z| z.norm()).fold(0.0_f64, f64::max)
    }
}

/// Relay receive covariance `Q = Σ_j g_rj g_rjᴴ p_j + I`, Hermitian PD.
pub fn relay_q(ch: &ChannelRealization, p: &RVec) -> CMat {
    assert_eq!(p.len(), ch.k, "power vector length must equal K");
    let mut q = CMat::identity(ch.m, ch.m);
    for j in 0..ch.k {
        let g = ch.g_rt.column(j);
        q += &g * g.adjoint() * C64::new(p[j], 0.0);
    }
    q
}

/// Relay transmit power `tr(R Q Rᴴ)` at source powers `p`.
pub fn relay_power(ch: &ChannelRealization, p: &RVec, r: &RelayMatrix) -> f64 {
    let q = relay_q(ch, p);
    (&r.r * q * r.r.adjoint()).trace().re
}

/// SINR of user `j` (0-based) with full interference accounting.
pub fn sinr(ch: &ChannelRealization, p: &RVec, r: &RelayMatrix, j: usize) -> f64 {
    assert!(j < ch.k, "user index out of range");
    let signal = ch.effective_gain(r, j, j).norm_sqr() * p[j];
    let mut denom = ch.relay_row(r, j).norm_squared() + 1.0;
    for l in 0..ch.k {
        if l != j {
            denom += ch.effective_gain(r, j, l).norm_sqr() * p[l];
        }
    }
    signal / denom
}

/// SINR of user `j` under interference neutralization, where the
/// interference terms vanish from the denominator by construction.
///
/// Errors if `r` does not actually neutralize the cross links, since the
/// simplified formula would then overstate the SINR.
pub fn sinr_in(ch: &ChannelRealization, p: &RVec, r: &RelayMatrix, j: usize) -> Result<f64> {
    assert!(j < ch.k, "user index out of range");
    let residual = ch.in_residual(r);
    let scale = ch.max_direct_gain();
    if residual > IN_RESIDUAL_REL_TOL * scale {
        return Err(Error::Dimension(format!(
            "relay matrix does not neutralize interference \
             (residual {residual:.3e} vs allowed {:.3e})",
            IN_RESIDUAL_REL_TOL * scale
        )));
    }
    let signal = ch.effective_gain(r, j, j).norm_sqr() * p[j];
    let denom = ch.relay_row(r, j).norm_squared() + 1.0;
    Ok(signal / denom)
}

/// Shannon rate `log₂(1 + s)` in bits per channel use.
pub fn rate(s: f64) -> f64 {
    debug_assert!(s >= 0.0, "SINR must be nonnegative");
    (1.0 + s).log2()
}

// JSON mirror: matrices as row-major arrays of [re, im] pairs, so channel
// realizations can be replayed and diffed as plain text.
#[derive(Serialize, Deserialize)]
struct ChannelJson {
    k: usize,
    m: usize,
    h: Vec<Vec<[f64; 2]>>,
    g_rt: Vec<Vec<[f64; 2]>>,
    g_dr: Vec<Vec<[f64; 2]>>,
}

fn mat_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<[f64; 2]>], nrows: usize, ncols: usize, name: &str) -> Result<CMat> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{name} must be {nrows}×{ncols}")));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl From<ChannelRealization> for ChannelJson {
    fn from(ch: ChannelRealization) -> Self {
        ChannelJson {
            k: ch.k,
            m: ch.m,
            h: mat_to_rows(&ch.h),
            g_rt: mat_to_rows(&ch.g_rt),
            g_dr: mat_to_rows(&ch.g_dr),
        }
    }
}

impl TryFrom<ChannelJson> for ChannelRealization {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        let ch = ChannelRealization {
            k: j.k,
            m: j.m,
            h: rows_to_mat(&j.h, j.k, j.k, "h")?,
            g_rt: rows_to_mat(&j.g_rt, j.m, j.k, "g_rt")?,
            g_dr: rows_to_mat(&j.g_dr, j.m, j.k, "g_dr")?,
        };
        if !ch.h.iter().all(|z| z.is_finite())
            || !ch.g_rt.iter().all(|z| z.is_finite())
            || !ch.g_dr.iter().all(|z| z.is_finite())
        {
            return Err(Error::Dimension("channel entries must be finite".into()));
        }
        Ok(ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_eig;

    #[test]
    fn draw_is_deterministic() {
        let a = draw_channel(3, 2, 42);
        let b = draw_channel(3, 2, 42);
        assert_eq!(a, b);
        let c = draw_channel(3, 2, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn draw_moments_match_cn01() {
        // 12 entries per K=M=2 draw; 10_000 draws gives 1.2e5 samples.
        let mut sum_sq = 0.0;
        let mut sum_re = 0.0;
        let mut sum_im = 0.0;
        let mut sum_reim = 0.0;
        let mut n = 0usize;
        for seed in 0..10_000u64 {
            let ch = draw_channel(2, 2, seed);
            for z in ch.h.iter().chain(ch.g_rt.iter()).chain(ch.g_dr.iter()) {
                sum_sq += z.norm_sqr();
                sum_re += z.re;
                sum_im += z.im;
                sum_reim += z.re * z.im;
                n += 1;
            }
        }
        let nf = n as f64;
        let mean_sq = sum_sq / nf;
        assert!((mean_sq - 1.0).abs() < 0.02, "E|z|^2 = {mean_sq}");
        // Re/Im each have variance 1/2; correlation estimate must be tiny.
        let corr = (sum_reim / nf - (sum_re / nf) * (sum_im / nf)) / 0.5;
        assert!(corr.abs() < 0.02, "corr(Re,Im) = {corr}");
    }

    #[test]
    fn relay_q_identity_at_zero_power() {
        let ch = draw_channel(2, 2, 7);
        let q = relay_q(&ch, &RVec::zeros(2));
        assert_eq!(q, CMat::identity(2, 2));
    }

    #[test]
    fn relay_q_single_user_unit_vector() {
        let mut ch = draw_channel(1, 3, 8);
        let mut g = CMat::zeros(3, 1);
        g[(0, 0)] = C64::new(1.0, 0.0);
        ch.g_rt = g;
        let q = relay_q(&ch, &RVec::from_vec(vec![2.0]));
        let mut expect = CMat::identity(3, 3);
        expect[(0, 0)] = C64::new(3.0, 0.0);
        assert_eq!(q, expect);
    }

    #[test]
    fn relay_q_dominates_identity() {
        for seed in 0..20u64 {
            let ch = draw_channel(3, 3, seed);
            let p = RVec::from_fn(3, |i, _| 1.0 + i as f64);
            let q = relay_q(&ch, &p);
            let (vals, _) = herm_eig(&(q - CMat::identity(3, 3)));
            assert!(vals[vals.len() - 1] >= -1e-12);
        }
    }

    #[test]
    fn relay_power_trivia() {
        let ch = draw_channel(2, 2, 9);
        let p = RVec::zeros(2);
        assert_eq!(relay_power(&ch, &p, &RelayMatrix::zero(2)), 0.0);
        let r = RelayMatrix::new(CMat::identity(2, 2));
        assert!((relay_power(&ch, &p, &r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relay_power_matches_signal_simulation() {
        // tr(R Q Rᴴ) is the average transmit power of R y_r when the
        // relay input is y_r = Σ_l g_rl s_l + n with s_l ~ CN(0, p_l),
        // n ~ CN(0, I). Estimate that average directly.
        use rand::SeedableRng;
        let ch = draw_channel(2, 2, 10);
        let p = RVec::from_vec(vec![2.0, 0.7]);
        let r = RelayMatrix::new(draw_channel(2, 2, 11).h);
        let expect = relay_power(&ch, &p, &r);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let nsamp = 100_000;
        let mut acc = 0.0;
        for _ in 0..nsamp {
            let mut y = CVec::zeros(2);
            for l in 0..2 {
                let s = draw_cn01(&mut rng) * C64::new(p[l].sqrt(), 0.0);
                y += ch.g_rt.column(l) * s;
            }
            for i in 0..2 {
                y[i] += draw_cn01(&mut rng);
            }
            acc += (&r.r * &y).norm_squared();
        }
        let est = acc / nsamp as f64;
        assert!(
            (est - expect).abs() < 0.02 * expect,
            "simulated {est}, formula {expect}"
        );
    }

    #[test]
    fn relay_power_is_quadratic_in_r() {
        let ch = draw_channel(2, 2, 13);
        let p = RVec::from_vec(vec![1.5, 3.0]);
        let r = RelayMatrix::new(draw_channel(2, 2, 14).g_dr);
        let base = relay_power(&ch, &p, &r);
        let scaled = RelayMatrix::new(&r.r * C64::new(2.5, 0.0));
        assert!((relay_power(&ch, &p, &scaled) - 2.5 * 2.5 * base).abs() < 1e-9 * base);
    }

    #[test]
    fn sinr_reduces_to_ic_when_relay_off() {
        let ch = draw_channel(2, 2, 15);
        let p = RVec::from_vec(vec![4.0, 2.0]);
        let r = RelayMatrix::zero(2);
        for j in 0..2 {
            let other = 1 - j;
            let expect = ch.h[(j, j)].norm_sqr() * p[j]
                / (ch.h[(j, other)].norm_sqr() * p[other] + 1.0);
            assert!((sinr(&ch, &p, &r, j) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sinr_zero_power_is_zero() {
        let ch = draw_channel(2, 2, 16);
        let r = RelayMatrix::new(ch.g_rt.clone());
        assert_eq!(sinr(&ch, &RVec::zeros(2), &r, 0), 0.0);
    }

    #[test]
    fn sinr_monotone_in_powers() {
        // Own power raises SINR, the other user's power lowers it.
        let ch = draw_channel(2, 2, 17);
        let r = RelayMatrix::new(draw_channel(2, 2, 18).h * C64::new(0.3, 0.0));
        let p0 = RVec::from_vec(vec![2.0, 2.0]);
        let eps = 1e-4;
        for j in 0..2 {
            let mut up = p0.clone();
            up[j] += eps;
            assert!(sinr(&ch, &up, &r, j) > sinr(&ch, &p0, &r, j));
            let other = 1 - j;
            let mut cross = p0.clone();
            cross[other] += eps;
            assert!(sinr(&ch, &cross, &r, j) <= sinr(&ch, &p0, &r, j));
        }
    }

    #[test]
    fn sinr_in_requires_neutralization() {
        let ch = draw_channel(2, 2, 19);
        let p = RVec::from_vec(vec![1.0, 1.0]);
        // A random relay matrix leaves interference standing.
        let r = RelayMatrix::new(draw_channel(2, 2, 20).h);
        assert!(sinr_in(&ch, &p, &r, 0).is_err());
    }

    #[test]
    fn sinr_in_diagonal_channel_relay_off() {
        let mut ch = draw_channel(2, 2, 21);
        ch.h[(0, 1)] = C64::new(0.0, 0.0);
        ch.h[(1, 0)] = C64::new(0.0, 0.0);
        let p = RVec::from_vec(vec![3.0, 5.0]);
        let r = RelayMatrix::zero(2);
        for j in 0..2 {
            let got = sinr_in(&ch, &p, &r, j).unwrap();
            let expect = ch.h[(j, j)].norm_sqr() * p[j];
            assert!((got - expect).abs() < 1e-12);
            // And it agrees with the full SINR since nothing interferes.
            assert!((got - sinr(&ch, &p, &r, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(0.0), 0.0);
        assert!((rate(1.0) - 1.0).abs() < 1e-15);
        assert!((rate(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn channel_json_roundtrip() {
        let ch = draw_channel(3, 3, 22);
        let text = serde_json::to_string(&ch).unwrap();
        let back: ChannelRealization = serde_json::from_str(&text).unwrap();
        assert_eq!(ch, back);
    }
}
