//! Classical and quantum Fisher information and the bounds built on them.
//!
//! Classical information is computed from outcome laws by finite
//! differences. Quantum information comes from the curvature of the state
//! fidelity, which for incoherent mixtures of displaced PSF states reduces to
//! the trace norm of a small overlap matrix.

mod bounds;
mod fisher;
mod quantum;

pub use bounds::{
    bias_corrected_crb, crb, fmt_num, gaussian_prior_information, modified_fi_relative, qcrb_3d, van_trees_bound,
    BoundReport, BoundRow,
};
pub use fisher::{default_step, fisher_matrix, fisher_scalar, FisherInfo, FisherMatrix};
pub use quantum::{kappa, mixture_fidelity, qfi_from_fidelity, qfi_partial_coherence_bound, QuantumStateModel};

