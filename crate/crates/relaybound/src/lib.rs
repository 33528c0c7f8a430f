//! Achievable-rate Pareto boundaries for the K-user interference channel
//! assisted by an instantaneous (relay-without-delay) amplify-and-forward
//! relay with M antennas.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: complex matrix helpers (Kronecker products, vectorization,
//!   pseudo-inverses, Hermitian eigendecomposition, null spaces).
//! - [`channel`]: channel realizations, power budgets, SINR and rate
//!   evaluation for a given relay matrix.
//! - [`neutralization`]: interference neutralization through the relay,
//!   its feasibility test, and the minimum-power neutralizing relay matrix.
//! - [`qcqp`]: the quadratically constrained programs whose semidefinite
//!   relaxations yield optimal relay matrices, plus the null-space
//!   projection that restores strict feasibility in the neutralized case.
//! - [`sdp`]: a self-contained primal-dual interior-point solver for the
//!   Hermitian semidefinite relaxations, with rank-one extraction and
//!   Gaussian randomization fallback.
//! - [`power`]: closed-form Pareto-optimal source power allocation for a
//!   fixed relay matrix, with a grid-search oracle.
//! - [`pareto`]: rate-region boundary sweeps, interference-channel
//!   baselines, sum-rate and fairness objectives.
//! - [`experiment`]: reproducible Monte-Carlo experiment runners and
//!   CSV/JSON output, shared by the CLI and the examples.
//!
//! Powers are noise-normalized throughout: every receiver noise variance
//! is 1, so transmit powers are SNRs and dB conversion happens only at
//! the configuration boundary.

pub mod channel;
pub mod error;
pub mod experiment;
mod jsonfmt;
pub mod linalg;
pub mod neutralization;
pub mod pareto;
pub mod power;
pub mod qcqp;
pub mod sdp;

pub use error::Error;

/// Shorthand used everywhere: double-precision complex scalar.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

/// Dense real column vector.
pub type RVec = nalgebra::DVector<f64>;
