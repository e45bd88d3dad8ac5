use std::cell::Cell;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::measure::{ContinuousLaw, DiscreteLaw, Law, OutcomeModel, Statistics};
use crate::optics::Psf;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::{Error, Result};

/// Probabilities below this are treated as zero.
const TINY: f64 = 1e-300;

/// Default derivative step for separation-like parameters, `10⁻³/Δk`.
pub fn default_step(psf: &Psf) -> f64 {
    1e-3 / psf.delta_k()
}

/// Fisher information of a one-parameter model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo {
    pub value: f64,
    /// A zero-probability outcome had a nonzero derivative.
    pub singular_support: bool,
    /// `true` for multinomial laws (per photon entering the receiver);
    /// `false` for Poisson-intensity laws (per emitted photon).
    pub per_photon: bool,
}

/// Fisher information matrix of a multi-parameter model.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub params: Vec<String>,
    pub matrix: DMatrix<f64>,
    pub per_photon: bool,
    pub singular_support: bool,
    pub rank_deficient: bool,
}

impl FisherMatrix {
    /// `(1/N)·I⁻¹`, with the Moore-Penrose pseudo-inverse when singular.
    pub fn crb(&self, photons: f64) -> DMatrix<f64> {
        pseudo_inverse(&self.matrix) / photons
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().cloned().collect()
    }
}

pub(crate) fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = 1e-12 * max.max(TINY);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cut {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / l;
        }
    }
    out
}

/// Five-point central difference weights at offsets `-2h, -h, +h, +2h`.
const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn perturbed_laws(model: &dyn OutcomeModel, params: &[f64], j: usize, h: f64) -> Result<Vec<Law>> {
    STENCIL
        .iter()
        .map(|(o, _)| {
            let mut p = params.to_vec();
            p[j] += o * h;
            model.law(&p)
        })
        .collect()
}

fn discrete_gradient(laws: &[Law], h: f64) -> Result<Vec<f64>> {
    let ds: Vec<&DiscreteLaw> = laws
        .iter()
        .map(|l| l.as_discrete().ok_or_else(|| Error::domain("mixed law types under perturbation")))
        .collect::<Result<_>>()?;
    let n = ds[0].len();
    if ds.iter().any(|d| d.len() != n) {
        return Err(Error::numerical("outcome set changes under perturbation"));
    }
    Ok((0..n).map(|i| ds.iter().zip(STENCIL).map(|(d, (_, w))| w * d.probs[i]).sum::<f64>() / (12.0 * h)).collect())
}

fn continuous_derivative(laws: &[&ContinuousLaw], h: f64, x: f64) -> f64 {
    laws.iter().zip(STENCIL).map(|(l, (_, w))| w * l.density(x)).sum::<f64>() / (12.0 * h)
}

/// Per-photon Fisher information of a one-parameter model at `theta`.
///
/// Derivatives use a five-point central difference with step `step`.
/// Discrete laws sum `(∂p)²/p` over outcomes; densities are integrated by
/// adaptive quadrature. Values below the rounding floor `~(ε/step)²` are
/// reported as exactly zero.
pub fn fisher_scalar(model: &dyn OutcomeModel, theta: f64, step: f64) -> Result<FisherInfo> {
    if model.param_names().len() != 1 {
        return Err(Error::domain("fisher_scalar needs a one-parameter model"));
    }
    let m = fisher_matrix(model, &[theta], &[step])?;
    // Below the rounding floor of the difference quotient the value is noise.
    let floor = 1e2 * (f64::EPSILON / step).powi(2);
    let v = m.matrix[(0, 0)];
    Ok(FisherInfo { value: if v.abs() < floor { 0.0 } else { v }, singular_support: m.singular_support, per_photon: m.per_photon })
}

/// Full Fisher information matrix at `params` with per-parameter steps.
pub fn fisher_matrix(model: &dyn OutcomeModel, params: &[f64], steps: &[f64]) -> Result<FisherMatrix> {
    let names = model.param_names();
    if params.len() != names.len() || steps.len() != names.len() {
        return Err(Error::domain("parameter and step vectors must match the model"));
    }
    if steps.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::domain("derivative steps must be positive"));
    }
    let k = params.len();
    let center = model.law(params)?;
    let perturbed: Vec<Vec<Law>> =
        (0..k).map(|j| perturbed_laws(model, params, j, steps[j])).collect::<Result<_>>()?;
    let mut mat = DMatrix::zeros(k, k);
    let mut singular = false;
    let per_photon;
    match &center {
        Law::Discrete(d) => {
            per_photon = d.statistics == Statistics::Multinomial;
            let grads: Vec<Vec<f64>> =
                perturbed.iter().zip(steps).map(|(l, h)| discrete_gradient(l, *h)).collect::<Result<_>>()?;
            for (i, &p) in d.probs.iter().enumerate() {
                if p < TINY {
                    if grads.iter().any(|g| g[i].abs() > 1e-12) {
                        singular = true;
                    }
                    continue;
                }
                for a in 0..k {
                    for b in 0..=a {
                        mat[(a, b)] += grads[a][i] * grads[b][i] / p;
                    }
                }
            }
        }
        Law::Continuous(c) => {
            per_photon = true;
            let laws: Vec<Vec<&ContinuousLaw>> = perturbed
                .iter()
                .map(|ls| ls.iter().map(|l| l.as_continuous().ok_or_else(|| Error::domain("mixed law types"))).collect())
                .collect::<Result<_>>()?;
            let mut all: Vec<&ContinuousLaw> = vec![c];
            all.extend(laws.iter().flatten());
            let pts = ContinuousLaw::joint_breakpoints(&all);
            let flag = Cell::new(false);
            for a in 0..k {
                for b in 0..=a {
                    let f = |x: f64| {
                        let p = c.density(x);
                        let da = continuous_derivative(&laws[a], steps[a], x);
                        if p < TINY {
                            if da.abs() > 1e-12 {
                                flag.set(true);
                            }
                            return 0.0;
                        }
                        let db = if a == b { da } else { continuous_derivative(&laws[b], steps[b], x) };
                        da * db / p
                    };
                    mat[(a, b)] = integrate_with_breaks(f, &pts, QuadOptions::default())?.value;
                }
            }
            singular = flag.get();
        }
    }
    for a in 0..k {
        for b in 0..a {
            mat[(b, a)] = mat[(a, b)];
        }
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite Fisher information entry"));
    }
    let eig = SymmetricEigen::new(mat.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    // Entries below 1e-16/h² are indistinguishable from difference noise.
    let h_min = steps.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank_deficient = min <= (1e-10 * max).max(1e-16 / (h_min * h_min));
    Ok(FisherMatrix { params: names, matrix: mat, per_photon, singular_support: singular, rank_deficient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{spade_pmf, FnModel};
    use crate::optics::ModeBasis;
    use crate::scene::TwoPointScene;

    #[test]
    fn matches_analytic_bernoulli() {
        // p(θ) = sin²θ has Fisher information 4 everywhere.
        let m = FnModel::new("t", &["t"], |p: &[f64]| {
            let s = p[0].sin().powi(2);
            Ok(Law::Discrete(DiscreteLaw::new(
                vec![crate::measure::Outcome::Click, crate::measure::Outcome::Bucket],
                vec![s, 1.0 - s],
                Statistics::Multinomial,
            )?))
        });
        let fi = fisher_scalar(&m, 0.7, 1e-3).unwrap();
        assert!((fi.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn spade_at_zero_is_degenerate() {
        let psf = Psf::gaussian(0.5).unwrap();
        let basis = ModeBasis::hermite_gaussian(0.5, 10).unwrap();
        let model = spade_pmf(&TwoPointScene::equal(0.0).unwrap(), &psf, &basis).unwrap();
        let m = fisher_matrix(&model, &[0.0], &[1e-3]).unwrap();
        assert!(m.matrix[(0, 0)].abs() < 1e-9);
        assert!(m.rank_deficient);
    }

    #[test]
    fn pseudo_inverse_of_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&m);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15 && p[(1, 1)] == 0.0);
    }
}
