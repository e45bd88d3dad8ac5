//! Hermite-Gaussian moments of extended incoherent objects.
//!
//! A sorter aligned on the object counts photons in HG mode `(m, n)` with
//! probability `P_mn`, a Gaussian-weighted `(2m, 2n)` moment of the
//! intensity. Interleaved sorters measuring `(ψ_m ± ψ_{m+1})/√2` add the odd
//! moments along x. The module estimates these from records, reconstructs
//! objects on a declared finite support and produces the direct-imaging
//! baseline for comparison.

mod baseline;
mod reconstruct;
mod sets;
mod weights;

pub use baseline::{diffraction_baseline, optical_transfer_function};
pub use reconstruct::{nnls, reconstruct, ReconstructOptions, ReconstructionResult};
pub use sets::{estimate_moments, MomentEstimate, MomentSet, ParityCoverage};
pub use weights::{coherent_moment, incoherent_moment, odd_moment, FieldGrid};
