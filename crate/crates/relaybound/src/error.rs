//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong between a channel realization and a rate
/// region on disk.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix argument has the wrong shape for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Interference neutralization requires as many relay antennas as
    /// users; other layouts leave the relay equation without the square
    /// invertible structure the closed forms rely on.
    #[error(
        "neutralization needs relay antennas == users (got M = {antennas}, K = {users}); \
         the wide case M > K is not supported"
    )]
    AntennaMismatch { antennas: usize, users: usize },

    /// A matrix that the model requires to be invertible is numerically
    /// singular (e.g. a degenerate channel draw).
    #[error("singular matrix in {context} (min singular value {sigma_min:.3e})")]
    Singular { context: &'static str, sigma_min: f64 },

    /// Neutralizing all interference would exceed the relay power budget,
    /// so no neutralizing relay matrix exists for this channel.
    #[error(
        "interference neutralization infeasible: needs relay power {min_power:.6} \
         but the budget is {budget:.6}"
    )]
    InfeasibleNeutralization { min_power: f64, budget: f64 },

    /// The interior-point method produced a certificate that the problem
    /// has no feasible point.
    #[error("SDP infeasible: {0}")]
    SdpInfeasible(String),

    /// The interior-point method stalled without either converging or
    /// certifying infeasibility.
    #[error("SDP numerical failure: {0}")]
    SdpNumericalFailure(String),

    /// The homogenizing scalar of a fractional program came back too close
    /// to zero to divide by, so no relay matrix can be recovered.
    #[error("relay recovery failed: homogenizing scalar t = {t:.3e} is numerically zero")]
    RecoveryDegenerate { t: f64 },

    /// A rate-region query was made against an empty point set.
    #[error("empty rate region: {0}")]
    EmptyRegion(String),

    /// Experiment configuration rejected before any computation ran.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    TomlParse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
