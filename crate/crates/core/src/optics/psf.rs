use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sampled::SampledPsf;
use crate::quadrature::{integrate, integrate_with_breaks, uniform_breaks, QuadOptions};
use crate::{Error, Result};

/// Family of a point-spread function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsfKind {
    Gaussian,
    Sinc,
    CustomSampled,
}

#[derive(Debug, Clone)]
enum Shape {
    Gaussian { sigma: f64 },
    Sinc { w: f64 },
    Sampled(Arc<SampledPsf>),
}

/// Normalized real amplitude PSF with its cached RMS bandwidth.
#[derive(Debug, Clone)]
pub struct Psf {
    shape: Shape,
    delta_k: f64,
}

/// Number of sinc lobes (half-periods π/W) kept on each side in
/// position-space integrals.
pub(crate) const SINC_HALF_WINDOW_LOBES: f64 = 400.0;

impl Psf {
    /// Gaussian amplitude `(2πσ²)^{-1/4} exp(-x²/4σ²)`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("gaussian sigma must be positive, got {sigma}")));
        }
        Ok(Self { shape: Shape::Gaussian { sigma }, delta_k: 1.0 / (2.0 * sigma) })
    }

    /// Sinc amplitude `√(W/π)·sin(Wx)/(Wx)` with k-space half-width `W`.
    pub fn sinc(k_halfwidth: f64) -> Result<Self> {
        if !(k_halfwidth > 0.0 && k_halfwidth.is_finite()) {
            return Err(Error::domain(format!("sinc half-width must be positive, got {k_halfwidth}")));
        }
        Ok(Self { shape: Shape::Sinc { w: k_halfwidth }, delta_k: k_halfwidth / 3f64.sqrt() })
    }

    /// Tabulated PSF; the grid spacing must not exceed `1/(100·Δk)`.
    pub fn sampled(psf: SampledPsf) -> Result<Self> {
        let dk = psf.integrate(|x| psf.derivative(x).powi(2))?.sqrt();
        if !(dk > 0.0 && dk.is_finite()) {
            return Err(Error::domain("sampled PSF has no finite bandwidth"));
        }
        let sigma_eq = 1.0 / (2.0 * dk);
        if psf.spacing() > sigma_eq / 50.0 * (1.0 + 1e-9) {
            return Err(Error::domain(format!(
                "sampled PSF spacing {} exceeds sigma/50 = {}",
                psf.spacing(),
                sigma_eq / 50.0
            )));
        }
        Ok(Self { shape: Shape::Sampled(Arc::new(psf)), delta_k: dk })
    }

    pub fn from_samples(positions: &[f64], amplitudes: &[f64]) -> Result<Self> {
        Self::sampled(SampledPsf::new(positions, amplitudes)?)
    }

    pub fn kind(&self) -> PsfKind {
        match self.shape {
            Shape::Gaussian { .. } => PsfKind::Gaussian,
            Shape::Sinc { .. } => PsfKind::Sinc,
            Shape::Sampled(_) => PsfKind::CustomSampled,
        }
    }

    /// σ for Gaussian, W for sinc, grid spacing for sampled PSFs.
    pub fn width_param(&self) -> f64 {
        match &self.shape {
            Shape::Gaussian { sigma } => *sigma,
            Shape::Sinc { w } => *w,
            Shape::Sampled(s) => s.spacing(),
        }
    }

    pub fn delta_k(&self) -> f64 {
        self.delta_k
    }

    /// Gaussian-equivalent width `1/(2Δk)`.
    pub fn sigma_equivalent(&self) -> f64 {
        0.5 / self.delta_k
    }

    pub fn sampled_table(&self) -> Option<&SampledPsf> {
        match &self.shape {
            Shape::Sampled(s) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn same_shape(&self, other: &Psf) -> bool {
        match (&self.shape, &other.shape) {
            (Shape::Gaussian { sigma: a }, Shape::Gaussian { sigma: b }) => (a - b).abs() <= 1e-12 * a,
            (Shape::Sinc { w: a }, Shape::Sinc { w: b }) => (a - b).abs() <= 1e-12 * a,
            (Shape::Sampled(a), Shape::Sampled(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { sigma } => {
                (2.0 * PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
            }
            Shape::Sinc { w } => (w / PI).sqrt() * sinc(w * x),
            Shape::Sampled(s) => s.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { sigma } => -x / (2.0 * sigma * sigma) * self.amplitude(x),
            Shape::Sinc { w } => (w / PI).sqrt() * w * sinc_prime(w * x),
            Shape::Sampled(s) => s.derivative(x),
        }
    }

    pub fn intensity(&self, x: f64) -> f64 {
        self.amplitude(x).powi(2)
    }

    /// Amplitude overlap `C(d) = ∫ψ(x)ψ(x−d)dx`.
    pub fn overlap(&self, d: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { .. } => (-0.5 * (d * self.delta_k).powi(2)).exp(),
            Shape::Sinc { w } => sinc(w * d),
            Shape::Sampled(s) => {
                let (a, b) = s.range();
                let (lo, hi) = (a.max(a + d), b.min(b + d));
                if lo >= hi {
                    return 0.0;
                }
                let pts = uniform_breaks(lo, hi, 8.0 * s.spacing());
                integrate_with_breaks(|x| s.value(x) * s.value(x - d), &pts, QuadOptions::default().with_abs_tol(1e-13))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// Overlap of the displaced PSF with its mirror image about the origin,
    /// `∫ψ(x−d)ψ(−x−d)dx`.
    pub fn reflected_overlap(&self, d: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { .. } | Shape::Sinc { .. } => self.overlap(2.0 * d),
            Shape::Sampled(s) => {
                let (a, b) = s.range();
                let (lo, hi) = ((a + d).max(-b - d), (b + d).min(-a - d));
                if lo >= hi {
                    return 0.0;
                }
                let pts = uniform_breaks(lo, hi, 8.0 * s.spacing());
                integrate_with_breaks(|x| s.value(x - d) * s.value(-x - d), &pts, QuadOptions::default().with_abs_tol(1e-13))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// `∫ψ'(u)ψ'(u+d)du`.
    pub fn derivative_overlap(&self, d: f64) -> Result<f64> {
        match &self.shape {
            Shape::Gaussian { .. } => {
                let q = (d * self.delta_k).powi(2);
                Ok(self.delta_k.powi(2) * (1.0 - q) * (-0.5 * q).exp())
            }
            Shape::Sinc { w } => {
                // Flat spectrum 1/(2W) on [-W, W].
                let pts = uniform_breaks(-*w, *w, (PI / d.abs().max(1e-12)).min(2.0 * w));
                let r = integrate_with_breaks(|k| k * k * (k * d).cos() / (2.0 * w), &pts, QuadOptions::default())?;
                Ok(r.value)
            }
            Shape::Sampled(s) => {
                let (a, b) = s.range();
                let (lo, hi) = (a.max(a - d), b.min(b - d));
                if lo >= hi {
                    return Ok(0.0);
                }
                let pts = uniform_breaks(lo, hi, 8.0 * s.spacing());
                Ok(integrate_with_breaks(|u| s.derivative(u) * s.derivative(u + d), &pts, QuadOptions::default())?.value)
            }
        }
    }

    /// Normalized derivative correlation `κ(θ)`, with `κ(0) = 1`.
    pub fn kappa(&self, theta: f64) -> Result<f64> {
        Ok(self.derivative_overlap(theta)? / self.delta_k.powi(2))
    }

    /// Breakpoints covering the support of intensities centred on `centers`.
    pub(crate) fn window(&self, centers: &[f64]) -> Vec<f64> {
        let lo = centers.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match &self.shape {
            Shape::Gaussian { sigma } => {
                let mut pts = vec![lo - 10.0 * sigma, hi + 10.0 * sigma];
                pts.extend(centers.iter().cloned());
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts
            }
            Shape::Sinc { w } => {
                let half = SINC_HALF_WINDOW_LOBES * PI / w;
                uniform_breaks(lo - half, hi + half, PI / w)
            }
            Shape::Sampled(s) => {
                let (a, b) = s.range();
                uniform_breaks(lo + a, hi + b, 8.0 * s.spacing())
            }
        }
    }

    /// Draws a position from `|ψ(x)|²`.
    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.shape {
            Shape::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            Shape::Sinc { w } => loop {
                // Cauchy envelope; sin²u/u² ≤ 2/(1+u²) everywhere.
                let u = (PI * (rng.random::<f64>() - 0.5)).tan();
                let accept = if u == 0.0 { 0.5 } else { (u.sin() / u).powi(2) * (1.0 + u * u) / 2.0 };
                if rng.random::<f64>() < accept {
                    break u / w;
                }
            },
            Shape::Sampled(s) => s.quantile(rng.random::<f64>()),
        }
    }

    /// `∫|ψ|²dx` evaluated in the domain natural to the PSF family.
    pub fn norm_squared(&self) -> Result<f64> {
        match &self.shape {
            Shape::Gaussian { sigma } => Ok(integrate(|x| self.intensity(x), -10.0 * sigma, 10.0 * sigma, QuadOptions::default())?.value),
            Shape::Sinc { w } => Ok(integrate(|_| 1.0 / (2.0 * w), -*w, *w, QuadOptions::default())?.value),
            Shape::Sampled(s) => s.integrate(|x| s.value(x).powi(2)),
        }
    }
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

fn sinc_prime(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        u * (-1.0 / 3.0 + u2 * (1.0 / 30.0 + u2 * (-1.0 / 840.0 + u2 / 45360.0)))
    } else {
        (u * u.cos() - u.sin()) / (u * u)
    }
}

/// Gaussian PSF of width `sigma`.
pub fn make_gaussian_psf(sigma: f64) -> Result<Psf> {
    Psf::gaussian(sigma)
}

/// Sinc PSF with k-space half-width `k_halfwidth`.
pub fn make_sinc_psf(k_halfwidth: f64) -> Result<Psf> {
    Psf::sinc(k_halfwidth)
}

/// RMS spatial bandwidth `[∫|ψ'|²dx]^{1/2}` recomputed by quadrature.
///
/// Sinc PSFs are integrated over their compact spectrum instead of in
/// position space.
pub fn rms_bandwidth(psf: &Psf) -> Result<f64> {
    let v = match &psf.shape {
        Shape::Gaussian { sigma } => {
            let pts = uniform_breaks(-10.0 * sigma, 10.0 * sigma, *sigma);
            integrate_with_breaks(|x| psf.derivative(x).powi(2), &pts, QuadOptions::default())?.value
        }
        Shape::Sinc { w } => integrate(|k| k * k / (2.0 * w), -*w, *w, QuadOptions::default())?.value,
        Shape::Sampled(s) => s.integrate(|x| s.derivative(x).powi(2))?,
    };
    if !(v > 0.0) {
        return Err(Error::numerical("bandwidth integral is not positive"));
    }
    Ok(v.sqrt())
}

/// Normalized Hermite-Gaussian function of order `n` and width `scale`.
///
/// Order 0 is the Gaussian PSF of the same width and order 1 is
/// `-(1/Δk)∂ψ/∂x`.
pub fn hg_mode(n: usize, scale: f64, x: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::domain("mode scale must be positive"));
    }
    Ok(hg_modes(n, scale, x)[n])
}

/// All Hermite-Gaussian functions of orders `0..=n_max` at `x`.
pub fn hg_modes(n_max: usize, scale: f64, x: f64) -> Vec<f64> {
    let s = SQRT_2 * scale;
    let norm = s.sqrt().recip();
    let mut v = crate::special::hermite_functions(n_max, x / s);
    v.iter_mut().for_each(|f| *f *= norm);
    v
}
