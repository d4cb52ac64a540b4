//! Leakage-minimizing precoder design for multi-cell MIMO networks in which
//! every cell runs either uplink or downlink.
//!
//! The solver alternates exact per-block minimizations of a weighted
//! interference-plus-signal-leakage objective over unitary subspaces, then
//! fits MMSE or ZF intra-cell precoders, and the rate module scores the
//! result as achievable sum-rates with interference treated as noise.
//!
//! Modules, bottom up:
//! - [`linalg`]: complex Hermitian eigen tools, orthogonal complements,
//!   random semi-unitary draws, HPD solves and log-determinants.
//! - [`network`]: scenario configuration, channel realizations, precoder
//!   state, and a signal-level simulation oracle.
//! - [`leakage`]: the objective and the per-block covariance assemblies.
//! - [`solver`]: the alternating loop and intra-cell precoding.
//! - [`rate`]: downlink/uplink sum-rates and the covariance consistency
//!   check against the simulation oracle.

pub mod error;
pub mod leakage;
pub mod linalg;
pub mod network;
pub mod rate;
pub mod solver;

pub use error::{Error, Result};
pub use leakage::{total_objective, ObjectiveBreakdown};
pub use linalg::CMatrix;
pub use network::{
    draw_channels, init_precoders, trial_rng, validate_config, ChannelSet, NetworkConfig,
    PrecoderState,
};
pub use rate::{evaluate_rates, RateReport};
pub use solver::{run_silm, run_silm_from, PrecoderKind, SolverParams, SolverReport};
