use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::measure::SceneFamily;
use crate::optics::{Psf, PsfKind};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::scene::Emitter;
use crate::{Error, Result};

/// One-parameter family of single-photon (or coherent) quantum states.
#[derive(Clone)]
pub enum QuantumStateModel {
    /// Incoherent mixture of displaced PSF states `Σ w_k |ψ_{x_k}⟩⟨ψ_{x_k}|`.
    Mixture { psf: Psf, family: Arc<dyn SceneFamily> },
    /// Coherent state with field `α(x|θ) = α₁ψ(x−c+θ/2) + α₂ψ(x−c−θ/2)`.
    ///
    /// With `per_emitted` the information is divided by `|α₁|²+|α₂|²`.
    CoherentPair { psf: Psf, alpha1: Complex64, alpha2: Complex64, centroid: f64, per_emitted: bool },
}

impl std::fmt::Debug for QuantumStateModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuantumStateModel::Mixture { psf, family } => {
                f.debug_struct("Mixture").field("psf", psf).field("params", &family.param_names()).finish()
            }
            QuantumStateModel::CoherentPair { alpha1, alpha2, .. } => {
                f.debug_struct("CoherentPair").field("alpha1", alpha1).field("alpha2", alpha2).finish()
            }
        }
    }
}

impl QuantumStateModel {
    pub fn mixture<F: SceneFamily + 'static>(psf: Psf, family: F) -> Self {
        QuantumStateModel::Mixture { psf, family: Arc::new(family) }
    }

    /// Two coherent sources of mean photon number `photons/2` each with
    /// relative phase `phase` between them.
    pub fn coherent_pair(psf: Psf, photons: f64, phase: f64) -> Result<Self> {
        if !(photons > 0.0) {
            return Err(Error::domain("photon number must be positive"));
        }
        let a = (0.5 * photons).sqrt();
        Ok(QuantumStateModel::CoherentPair {
            psf,
            alpha1: Complex64::new(a, 0.0),
            alpha2: Complex64::from_polar(a, phase),
            centroid: 0.0,
            per_emitted: false,
        })
    }

    pub fn psf(&self) -> &Psf {
        match self {
            QuantumStateModel::Mixture { psf, .. } | QuantumStateModel::CoherentPair { psf, .. } => psf,
        }
    }

    /// Infidelity `1 − F` between the states at `a` and `b`.
    ///
    /// Coherent-state infidelity is computed from `‖α_a − α_b‖²` evaluated
    /// pointwise, so it stays accurate when the states nearly coincide.
    pub fn infidelity(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            QuantumStateModel::Mixture { psf, family } => {
                let ea = family.emitters(&[a])?;
                let eb = family.emitters(&[b])?;
                Ok(1.0 - mixture_fidelity(psf, &ea, &eb)?)
            }
            QuantumStateModel::CoherentPair { psf, alpha1, alpha2, centroid, .. } => {
                let field = |x: f64, t: f64| {
                    alpha1 * psf.amplitude(x - centroid + 0.5 * t) + alpha2 * psf.amplitude(x - centroid - 0.5 * t)
                };
                let centers = [centroid - 0.5 * a, centroid + 0.5 * a, centroid - 0.5 * b, centroid + 0.5 * b];
                let pts = psf.window(&centers);
                let d2 = integrate_with_breaks(
                    |x| (field(x, a) - field(x, b)).norm_sqr(),
                    &pts,
                    QuadOptions::default().with_abs_tol(1e-15),
                )?
                .value;
                Ok(-(-d2).exp_m1())
            }
        }
    }

    /// Fidelity `F = (tr|√ρ_a √ρ_b|)²`.
    pub fn fidelity(&self, a: f64, b: f64) -> Result<f64> {
        Ok(1.0 - self.infidelity(a, b)?)
    }
}

/// Amplitude overlap of two emitters' PSF states (separable in x and y).
fn emitter_overlap(psf: &Psf, a: &Emitter, b: &Emitter) -> f64 {
    let cx = psf.overlap(b.x - a.x);
    if a.y == b.y {
        cx
    } else {
        cx * psf.overlap(b.y - a.y)
    }
}

/// Fidelity between two incoherent mixtures of displaced PSF states.
///
/// `√F` is the trace norm of `M_ij = √(w_i v_j)⟨ψ_i|ψ_j⟩`; a closed form is
/// used for 2×2 and an SVD otherwise.
pub fn mixture_fidelity(psf: &Psf, a: &[Emitter], b: &[Emitter]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("mixtures need at least one component"));
    }
    if psf.kind() != PsfKind::Gaussian && a.iter().chain(b).any(|e| e.y != a[0].y) {
        return Err(Error::unsupported("two-dimensional mixtures need a separable Gaussian PSF"));
    }
    let m = DMatrix::from_fn(a.len(), b.len(), |i, j| {
        (a[i].weight * b[j].weight).sqrt() * emitter_overlap(psf, &a[i], &b[j])
    });
    let root = if m.nrows() == 2 && m.ncols() == 2 {
        let fro = m.iter().map(|v| v * v).sum::<f64>();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        (fro + 2.0 * det.abs()).sqrt()
    } else if m.nrows() == 1 || m.ncols() == 1 {
        m.norm()
    } else {
        m.singular_values().sum()
    };
    Ok(root * root)
}

/// Quantum Fisher information `−2∂²F` from the fidelity curvature.
///
/// Second differences of the infidelity at steps `h` and `2h` are combined by
/// Richardson extrapolation.
pub fn qfi_from_fidelity(model: &QuantumStateModel, theta: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::domain("step must be positive"));
    }
    let curvature = |h: f64| -> Result<f64> {
        let gp = model.infidelity(theta, theta + h)?;
        let gm = model.infidelity(theta, theta - h)?;
        if matches!(model, QuantumStateModel::Mixture { .. }) && gp.max(gm) < 1e-12 && gp.max(gm) > 0.0 {
            return Err(Error::numerical(format!(
                "infidelity {:.3e} at step {step:.3e} is at round-off level; use a larger step",
                gp.max(gm)
            )));
        }
        Ok(2.0 * (gp + gm) / (h * h))
    };
    let i1 = curvature(step)?;
    let i2 = curvature(2.0 * step)?;
    let value = (4.0 * i1 - i2) / 3.0;
    match model {
        QuantumStateModel::CoherentPair { alpha1, alpha2, per_emitted: true, .. } => {
            Ok(value / (alpha1.norm_sqr() + alpha2.norm_sqr()))
        }
        _ => Ok(value.max(0.0)),
    }
}

/// Upper bound `NΔk²(1 − Re[γκ(θ)])` on the QFI of a partially coherent pair.
pub fn qfi_partial_coherence_bound(gamma: Complex64, theta: f64, psf: &Psf, photons: f64) -> Result<f64> {
    if gamma.norm() > 1.0 + 1e-12 {
        return Err(Error::domain("|gamma| must not exceed 1"));
    }
    let kappa = psf.kappa(theta)?;
    Ok(photons * psf.delta_k().powi(2) * (1.0 - gamma.re * kappa))
}

/// Normalized derivative correlation `κ(θ)` of the PSF.
pub fn kappa(psf: &Psf, theta: f64) -> Result<f64> {
    psf.kappa(theta)
}
