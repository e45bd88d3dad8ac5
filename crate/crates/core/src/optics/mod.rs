//! Point-spread functions, transverse mode bases and their overlaps.
//!
//! Every receiver model is assembled from the amplitudes
//! `a_n(d) = ∫ψ_n(x)ψ(x−d)dx` between retained modes and a displaced PSF.
//! For a Gaussian PSF with the matched Hermite-Gaussian basis these have the
//! closed form `e^{-Q/2}(dΔk)^n/√n!`, so the mode probabilities are Poisson
//! with mean `Q = (dΔk)²`.

mod basis;
mod psf;
mod sampled;

pub use basis::{interleaved_pair, BasisKind, Interleave, ModeBasis};
pub use psf::{hg_mode, hg_modes, make_gaussian_psf, make_sinc_psf, rms_bandwidth, Psf, PsfKind};
pub use sampled::SampledPsf;

pub(crate) use basis::hg_amplitudes;

use crate::Result;

/// Mode probabilities of a displaced PSF plus the probability outside the
/// retained modes.
#[derive(Debug, Clone)]
pub struct ModeProbabilities {
    pub probs: Vec<f64>,
    pub leakage: f64,
}

/// `p[n] = a_n(d)²` for the retained modes and `leakage = 1 − Σ p`.
pub fn displaced_mode_probabilities(psf: &Psf, basis: &ModeBasis, d: f64) -> Result<ModeProbabilities> {
    let probs: Vec<f64> = basis.amplitudes(psf, d)?.iter().map(|a| a * a).collect();
    let leakage = (1.0 - probs.iter().sum::<f64>()).clamp(0.0, 1.0);
    Ok(ModeProbabilities { probs, leakage })
}

/// Mode amplitudes tabulated over a list of displacements.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub basis: ModeBasis,
    pub displacements: Vec<f64>,
    /// `amplitudes[n][k]` for mode `n` and displacement `k`.
    pub amplitudes: Vec<Vec<f64>>,
    pub leakage: Vec<f64>,
}

impl OverlapTable {
    pub fn new(psf: &Psf, basis: &ModeBasis, displacements: &[f64]) -> Result<Self> {
        basis.check_matches(psf)?;
        let cols: Vec<Vec<f64>> = displacements.iter().map(|d| basis.amplitudes_unchecked(psf, *d)).collect();
        let amplitudes = (0..basis.len()).map(|n| cols.iter().map(|c| c[n]).collect()).collect();
        let leakage = cols
            .iter()
            .map(|c| (1.0 - c.iter().map(|a| a * a).sum::<f64>()).clamp(0.0, 1.0))
            .collect();
        Ok(Self { basis: basis.clone(), displacements: displacements.to_vec(), amplitudes, leakage })
    }
}
