use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::psf::{hg_modes, Psf, PsfKind};
use crate::quadrature::{integrate, integrate_with_breaks, uniform_breaks, QuadOptions};
use crate::special::{legendre, spherical_bessel_j};
use crate::{Error, Result};

/// Family of transverse modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    HermiteGaussian,
    Parity,
    InterleavedHg,
    PsfAdapted,
}

/// Pairing pattern of an interleaved basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interleave {
    /// `(ψ0±ψ1)/√2, (ψ2±ψ3)/√2, …`
    Paired,
    /// `ψ0, (ψ1±ψ2)/√2, (ψ3±ψ4)/√2, …`
    Shifted,
}

#[derive(Debug)]
enum Adapted {
    Sinc { w: f64 },
    Sampled { psf: Psf, x0: f64, dx: f64, modes: Vec<Vec<f64>> },
}

/// Ordered orthonormal mode set truncated at index `cutoff`.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    kind: BasisKind,
    scale: f64,
    cutoff: usize,
    dims: u8,
    interleave: Interleave,
    adapted: Option<Arc<Adapted>>,
}

impl ModeBasis {
    pub fn hermite_gaussian(scale: f64, cutoff: usize) -> Result<Self> {
        Self::hg_like(BasisKind::HermiteGaussian, scale, cutoff, Interleave::Paired)
    }

    /// Even/odd classes of the HG basis; outcomes are reported per parity.
    pub fn parity(scale: f64, cutoff: usize) -> Result<Self> {
        Self::hg_like(BasisKind::Parity, scale, cutoff, Interleave::Paired)
    }

    pub fn interleaved(scale: f64, cutoff: usize, pattern: Interleave) -> Result<Self> {
        Self::hg_like(BasisKind::InterleavedHg, scale, cutoff, pattern)
    }

    fn hg_like(kind: BasisKind, scale: f64, cutoff: usize, interleave: Interleave) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain("basis scale must be positive"));
        }
        Ok(Self { kind, scale, cutoff, dims: 1, interleave, adapted: None })
    }

    /// Basis whose mode 0 is the PSF itself and whose higher modes are
    /// orthonormalized derivatives: HG for a Gaussian PSF, spherical-Bessel
    /// modes for a sinc PSF, and a numerical construction for sampled PSFs.
    pub fn psf_adapted(psf: &Psf, cutoff: usize) -> Result<Self> {
        match psf.kind() {
            PsfKind::Gaussian => Self::hermite_gaussian(psf.width_param(), cutoff),
            PsfKind::Sinc => Ok(Self {
                kind: BasisKind::PsfAdapted,
                scale: psf.sigma_equivalent(),
                cutoff,
                dims: 1,
                interleave: Interleave::Paired,
                adapted: Some(Arc::new(Adapted::Sinc { w: psf.width_param() })),
            }),
            PsfKind::CustomSampled => {
                if cutoff > 12 {
                    return Err(Error::domain("sampled PSF-adapted bases support cutoff <= 12"));
                }
                let adapted = sampled_adapted_modes(psf, cutoff)?;
                Ok(Self {
                    kind: BasisKind::PsfAdapted,
                    scale: psf.sigma_equivalent(),
                    cutoff,
                    dims: 1,
                    interleave: Interleave::Paired,
                    adapted: Some(Arc::new(adapted)),
                })
            }
        }
    }

    /// Two-dimensional product basis (HG along y), truncated by total order.
    pub fn two_dimensional(mut self) -> Self {
        self.dims = 2;
        self
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dims(&self) -> u8 {
        self.dims
    }

    pub fn interleave(&self) -> Interleave {
        self.interleave
    }

    /// Number of retained one-dimensional modes.
    pub fn len(&self) -> usize {
        self.cutoff + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Verifies that the basis was built for this PSF.
    pub fn check_matches(&self, psf: &Psf) -> Result<()> {
        match (&self.adapted, psf.kind()) {
            (None, PsfKind::Gaussian) => {
                if (self.scale - psf.width_param()).abs() > 1e-9 * self.scale {
                    return Err(Error::domain(format!(
                        "basis scale {} does not match PSF sigma {}",
                        self.scale,
                        psf.width_param()
                    )));
                }
                Ok(())
            }
            (None, _) => Err(Error::domain("Hermite-Gaussian bases require a Gaussian PSF of the same width")),
            (Some(a), _) => match (a.as_ref(), psf.kind()) {
                (Adapted::Sinc { w }, PsfKind::Sinc) if (w - psf.width_param()).abs() <= 1e-12 * w => Ok(()),
                (Adapted::Sampled { psf: p, .. }, PsfKind::CustomSampled) if p.same_shape(psf) => Ok(()),
                _ => Err(Error::domain("PSF-adapted basis was built for a different PSF")),
            },
        }
    }

    /// Value of retained mode `n` at `x`.
    pub fn mode(&self, n: usize, x: f64) -> f64 {
        match self.adapted.as_deref() {
            None => {
                let hg = hg_modes(self.cutoff + 1, self.scale, x);
                combine(self.kind, self.interleave, &hg, n)
            }
            Some(Adapted::Sinc { w }) => ((2 * n + 1) as f64 * w / PI).sqrt() * spherical_bessel_j(n, w * x),
            Some(Adapted::Sampled { x0, dx, modes, .. }) => {
                let t = (x - x0) / dx;
                if t < 0.0 || t >= (modes[n].len() - 1) as f64 {
                    return 0.0;
                }
                let i = t.floor() as usize;
                let f = t - i as f64;
                modes[n][i] * (1.0 - f) + modes[n][i + 1] * f
            }
        }
    }

    /// Amplitudes `a_n(d) = ∫ψ_n(x)ψ(x−d)dx` for `n = 0..=cutoff`.
    pub fn amplitudes(&self, psf: &Psf, d: f64) -> Result<Vec<f64>> {
        self.check_matches(psf)?;
        Ok(self.amplitudes_unchecked(psf, d))
    }

    pub(crate) fn amplitudes_unchecked(&self, psf: &Psf, d: f64) -> Vec<f64> {
        match self.adapted.as_deref() {
            None => {
                let hg = hg_amplitudes(self.cutoff + 1, d / (2.0 * self.scale));
                (0..=self.cutoff).map(|n| combine(self.kind, self.interleave, &hg, n)).collect()
            }
            Some(Adapted::Sinc { w }) => {
                (0..=self.cutoff).map(|n| ((2 * n + 1) as f64).sqrt() * spherical_bessel_j(n, w * d)).collect()
            }
            Some(Adapted::Sampled { x0, dx, modes, .. }) => modes
                .iter()
                .map(|m| {
                    m.iter()
                        .enumerate()
                        .map(|(j, v)| v * psf.amplitude(x0 + j as f64 * dx - d))
                        .sum::<f64>()
                        * dx
                })
                .collect(),
        }
    }

    /// Gram matrix of the retained one-dimensional modes by numerical
    /// integration (k-space for sinc-adapted modes).
    pub fn gram(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut g = DMatrix::zeros(n, n);
        match self.adapted.as_deref() {
            None => {
                let half = self.scale * (2.0 * (2.0 * (self.cutoff as f64 + 2.0)).sqrt() * 1.5 + 14.0);
                let pts = uniform_breaks(-half, half, self.scale);
                for i in 0..n {
                    for j in i..n {
                        let v = integrate_with_breaks(|x| self.mode(i, x) * self.mode(j, x), &pts, QuadOptions::default().with_abs_tol(1e-13))?.value;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
            }
            Some(Adapted::Sinc { .. }) => {
                // Mode n has spectrum ∝ P_n(k/W) on [-W, W].
                for i in 0..n {
                    for j in i..n {
                        let c = (((2 * i + 1) * (2 * j + 1)) as f64).sqrt() / 2.0;
                        let v = integrate(|t| c * legendre(i, t) * legendre(j, t), -1.0, 1.0, QuadOptions::default())?.value;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
            }
            Some(Adapted::Sampled { dx, modes, .. }) => {
                for i in 0..n {
                    for j in i..n {
                        let v: f64 = modes[i].iter().zip(&modes[j]).map(|(a, b)| a * b).sum::<f64>() * dx;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
            }
        }
        Ok(g)
    }

    /// Whether mode `n` has odd parity about the axis (HG-family and
    /// PSF-adapted bases of symmetric PSFs).
    pub fn is_odd(&self, n: usize) -> bool {
        n % 2 == 1
    }
}

fn combine(kind: BasisKind, pattern: Interleave, hg: &[f64], n: usize) -> f64 {
    match kind {
        BasisKind::InterleavedHg => match pattern {
            Interleave::Paired => {
                let lo = n - n % 2;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                FRAC_1_SQRT_2 * (hg[lo] + sign * hg[lo + 1])
            }
            Interleave::Shifted => {
                if n == 0 {
                    hg[0]
                } else {
                    let lo = if n % 2 == 1 { n } else { n - 1 };
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    FRAC_1_SQRT_2 * (hg[lo] + sign * hg[lo + 1])
                }
            }
        },
        _ => hg[n],
    }
}

/// For an interleaved basis, the lower HG index of retained mode `n` and
/// whether it is the symmetric (`+`) combination. Mode 0 of the shifted
/// pattern is the bare fundamental and returns `None`.
pub fn interleaved_pair(pattern: Interleave, n: usize) -> Option<(usize, bool)> {
    match pattern {
        Interleave::Paired => Some((n - n % 2, n % 2 == 0)),
        Interleave::Shifted => {
            if n == 0 {
                None
            } else if n % 2 == 1 {
                Some((n, true))
            } else {
                Some((n - 1, false))
            }
        }
    }
}

/// Matched Gaussian/HG amplitudes `e^{-Q/2} (dΔk)^n / √n!`, taking
/// `dΔk` directly.
pub(crate) fn hg_amplitudes(n_max: usize, d_dk: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut a = (-0.5 * d_dk * d_dk).exp();
    out.push(a);
    for n in 1..=n_max {
        a *= d_dk / (n as f64).sqrt();
        out.push(a);
    }
    out
}

fn sampled_adapted_modes(psf: &Psf, cutoff: usize) -> Result<Adapted> {
    let table = psf.sampled_table().ok_or_else(|| Error::domain("expected a sampled PSF"))?;
    let (a, _) = table.range();
    let dx = table.spacing();
    // Pad the support so spectral derivatives do not wrap around.
    let n_inner = table.nodes().count();
    let pad = n_inner / 2;
    let n = (n_inner + 2 * pad).next_power_of_two();
    let x0 = a - pad as f64 * dx;
    let base: Vec<f64> = (0..n).map(|j| psf.amplitude(x0 + j as f64 * dx)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec: Vec<Complex64> = base.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fwd.process(&mut spec);
    let freq = |j: usize| -> f64 {
        let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * PI * jj / (n as f64 * dx)
    };
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(cutoff + 1);
    for order in 0..=cutoff {
        if order == 0 {
            raw.push(base.clone());
            continue;
        }
        let mut s: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j == n / 2 && order % 2 == 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, freq(j)).powu(order as u32)
                }
            })
            .collect();
        inv.process(&mut s);
        raw.push(s.iter().map(|c| c.re / n as f64).collect());
    }
    // Modified Gram-Schmidt, applied twice for stability.
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() * dx;
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(cutoff + 1);
    for mut v in raw {
        for _ in 0..2 {
            for m in &modes {
                let c = dot(&v, m);
                v.iter_mut().zip(m).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if !(nrm > 1e-8) {
            return Err(Error::numerical("derivative modes became linearly dependent"));
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        modes.push(v);
    }
    // Orient odd modes like -ψ' (positive on the right of a symmetric PSF).
    for (k, m) in modes.iter_mut().enumerate() {
        let right: f64 = m.iter().enumerate().map(|(j, v)| v * (x0 + j as f64 * dx)).sum();
        let flip = if k % 2 == 1 { right < 0.0 } else { m.iter().map(|v| v * v * v).sum::<f64>() < 0.0 };
        if flip {
            m.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(Adapted::Sampled { psf: psf.clone(), x0, dx, modes })
}
