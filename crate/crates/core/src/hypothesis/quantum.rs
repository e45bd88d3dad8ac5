use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::chernoff::{golden_max, ExponentReport};
use crate::optics::Psf;
use crate::scene::{second_moments, Emitter, IntensityGrid};
use crate::{Error, Result};

fn overlap(psf: &Psf, a: &Emitter, b: &Emitter) -> f64 {
    let cx = psf.overlap(b.x - a.x);
    if a.y == b.y {
        cx
    } else {
        cx * psf.overlap(b.y - a.y)
    }
}

/// Returns the common position if every component sits at one point.
fn pure_point(h: &[Emitter]) -> Option<Emitter> {
    let first = *h.first()?;
    h.iter().all(|e| e.x == first.x && e.y == first.y).then_some(Emitter::at(1.0, first.x, first.y))
}

/// Quantum Chernoff exponent `−ln⟨ψ|ρ₂|ψ⟩` between a pure displaced-PSF
/// state and an incoherent mixture.
pub fn qce_pure(psf: &Psf, h1: &[Emitter], h2: &[Emitter]) -> Result<ExponentReport> {
    let psi = pure_point(h1).ok_or_else(|| Error::unsupported("the first hypothesis must be a pure state"))?;
    if h2.is_empty() {
        return Err(Error::domain("second hypothesis has no components"));
    }
    // ⟨ψ|ρ₂|ψ⟩ − 1 accumulated directly to avoid cancellation.
    let mut dev = 0.0;
    let mut total = 0.0;
    for e in h2 {
        let c = overlap(psf, &psi, e);
        dev += e.weight * (c * c - 1.0);
        total += e.weight;
    }
    dev += total - 1.0;
    let xi = if dev <= -1.0 { f64::INFINITY } else { -dev.ln_1p() };
    Ok(ExponentReport { xi: xi.max(0.0), s_star: 0.0, method: "pure-state overlap".into(), leading_coefficient: None })
}

/// `D(|ψ⟩⟨ψ| ‖ ρ₂) = −⟨ψ|ln ρ₂|ψ⟩` for a pure displaced-PSF state and an
/// incoherent mixture, through the eigen-decomposition of the mixture's
/// weighted Gram matrix. `+∞` when `ψ` leaves the support of `ρ₂`.
pub fn quantum_relative_entropy_pure(psf: &Psf, h1: &[Emitter], h2: &[Emitter]) -> Result<f64> {
    let psi = pure_point(h1).ok_or_else(|| Error::unsupported("the first hypothesis must be a pure state"))?;
    let k = h2.len();
    if k == 0 {
        return Err(Error::domain("second hypothesis has no components"));
    }
    let sw: Vec<f64> = h2.iter().map(|e| e.weight.sqrt()).collect();
    let g = DMatrix::from_fn(k, k, |i, j| sw[i] * sw[j] * overlap(psf, &h2[i], &h2[j]));
    let b: Vec<f64> = h2.iter().zip(&sw).map(|(e, s)| s * overlap(psf, &psi, e)).collect();
    let eig = SymmetricEigen::new(g);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut expect = 0.0;
    let mut captured = 0.0;
    for (m, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= 1e-14 * lmax {
            continue;
        }
        let v = eig.eigenvectors.column(m);
        let proj: f64 = v.iter().zip(&b).map(|(v, b)| v * b).sum::<f64>().powi(2) / l;
        expect += proj * l.ln();
        captured += proj;
    }
    if (captured - 1.0).abs() > 1e-8 {
        return Ok(f64::INFINITY);
    }
    Ok((-expect).max(0.0))
}

/// Leading-order relative entropies for detecting a companion of relative
/// brightness `b` at separation `θ` from a star (Gaussian PSF).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExoplanetEntropies {
    /// `b·(1 − e^{−(θΔk)²})`.
    pub quantum: f64,
    /// `½(e^{4(θΔk)²} − 1)·b²`.
    pub direct: f64,
    /// Higher orders in `b` are dropped.
    pub leading_order: bool,
}

/// Star-only versus star-plus-companion, to leading order in `b`.
///
/// The quantum value is `b(1 − |⟨ψ₀|ψ_θ⟩|²)`; the direct-imaging value is
/// `(b²/2)·χ²(p_θ‖p₀)` with `1 + χ² = ∫p_θ²/p₀ = e^{4(θΔk)²}`.
pub fn exoplanet_relative_entropies(b: f64, theta: f64, delta_k: f64) -> Result<ExoplanetEntropies> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::domain("brightness must lie in (0, 1)"));
    }
    if !(delta_k > 0.0) {
        return Err(Error::domain("delta_k must be positive"));
    }
    let q = (theta * delta_k).powi(2);
    Ok(ExoplanetEntropies { quantum: -b * (-q).exp_m1(), direct: 0.5 * (4.0 * q).exp_m1() * b * b, leading_order: true })
}

/// Exponent of an M-ary test: the smallest pairwise exponent.
pub fn m_ary_qce(pairwise: &DMatrix<f64>) -> Result<f64> {
    let m = pairwise.nrows();
    if m < 2 || pairwise.ncols() != m {
        return Err(Error::domain("need a square matrix over at least two hypotheses"));
    }
    let mut best = f64::INFINITY;
    for i in 0..m {
        if pairwise[(i, i)].abs() > 1e-12 {
            return Err(Error::domain("diagonal of the pairwise matrix must be zero"));
        }
        for j in 0..m {
            if i != j {
                if (pairwise[(i, j)] - pairwise[(j, i)]).abs() > 1e-12 * pairwise[(i, j)].abs().max(1.0) {
                    return Err(Error::domain("pairwise matrix must be symmetric"));
                }
                best = best.min(pairwise[(i, j)]);
            }
        }
    }
    Ok(best)
}

/// Leading-order QCE between two compact objects from their second moments.
///
/// To first order each object puts `Δk²·m_{x²}` and `Δk²·m_{y²}` of its light
/// into the first-order modes along x and y; the exponent is the Chernoff
/// exponent between those weak Poisson channels.
pub fn second_moment_qce(a: &IntensityGrid, b: &IntensityGrid, delta_k: f64) -> Result<ExponentReport> {
    let (ax, ay) = second_moments(a);
    let (bx, by) = second_moments(b);
    let k2 = delta_k * delta_k;
    let pa = [ax * k2, ay * k2];
    let pb = [bx * k2, by * k2];
    let gap = |s: f64| -> Result<f64> {
        Ok(pa.iter().zip(&pb).map(|(&x, &y)| super::chernoff::gap_term(s, x, y)).sum())
    };
    let (s_star, xi) = golden_max(gap, 0.0, 1.0, 1e-6)?;
    Ok(ExponentReport { xi, s_star, method: "second-moment leading order".into(), leading_coefficient: None })
}

/// Pairwise leading-order exponents over a library of objects.
pub fn pairwise_qce_matrix(library: &[IntensityGrid], delta_k: f64) -> Result<DMatrix<f64>> {
    let m = library.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = second_moment_qce(&library[i], &library[j], delta_k)?.xi;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}
