//! Discrimination between scene hypotheses: classical and quantum Chernoff
//! exponents, relative entropies and Monte Carlo error-rate experiments.

mod chernoff;
mod quantum;
mod simulate;

pub use chernoff::{chernoff_exponent, chernoff_objective, relative_entropy, ExponentReport};
pub use quantum::{
    exoplanet_relative_entropies, m_ary_qce, pairwise_qce_matrix, qce_pure, quantum_relative_entropy_pure,
    second_moment_qce, ExoplanetEntropies,
};
pub use simulate::{
    simulate_discrimination, DiscriminationReport, ErrorPoint, HypothesisPair, SamplingMethod,
};
