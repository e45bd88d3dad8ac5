//! Estimators of source parameters, Monte Carlo error studies and the
//! two-stage adaptive protocol (direct imaging for the centroid, then a
//! mode sorter aligned to it for the separation).

mod adaptive;
mod mle;
mod montecarlo;

pub use adaptive::{adaptive_mse, two_stage_adaptive, AdaptiveConfig, AdaptiveEstimate, AdaptiveMse};
pub use mle::{
    log_likelihood, numeric_mle, sample_mean_centroid, spade_mle_separation, EstimatorKind, EstimatorSpec,
    MleResult,
};
pub use montecarlo::{empirical_bias, monte_carlo_mse, spade_mle_mse_exact, BiasCurve, MCResult, SpadeErrorExact};
