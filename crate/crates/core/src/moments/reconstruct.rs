use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::sets::MomentSet;
use super::weights::mode_weights;
use crate::scene::IntensityGrid;
use crate::{Error, Result};

/// Non-negative least squares `min ‖Ax − b‖` subject to `x ≥ 0`
/// (Lawson-Hanson active set, with QR solves on the passive columns so the
/// conditioning of `A` is not squared). Returns the solution and the
/// residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::domain("matrix and target lengths differ"));
    }
    let (m, n) = a.shape();
    let at = a.transpose();
    // Stopping tolerance on the gradient, as in the classic implementation.
    let norm1 = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * norm1 * m.max(n) as f64;
    let solve = |passive: &[bool]| -> Result<DVector<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let ap = DMatrix::from_fn(m, idx.len(), |r, c| a[(r, idx[c])]);
        let zp = if m >= idx.len() {
            let qr = ap.clone().qr();
            let qtb = qr.q().transpose() * b;
            qr.r().solve_upper_triangular(&qtb)
        } else {
            None
        };
        let zp = match zp {
            Some(z) if z.iter().all(|v| v.is_finite()) => z,
            _ => ap
                .svd(true, true)
                .solve(b, 1e-14)
                .map_err(|e| Error::numerical(format!("active-set solve failed: {e}")))?,
        };
        let mut z = DVector::zeros(n);
        for (r, &i) in idx.iter().enumerate() {
            z[i] = zp[r];
        }
        Ok(z)
    };
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(3 * n + 10) {
        let w = &at * (b - a * &x);
        let next = (0..n).filter(|&i| !passive[i] && w[i] > tol).max_by(|&p, &q| w[p].total_cmp(&w[q]));
        let Some(j) = next else {
            let r = (a * &x - b).norm();
            return Ok((x, r));
        };
        passive[j] = true;
        loop {
            let z = solve(&passive)?;
            let bad: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if bad.is_empty() {
                x = z;
                break;
            }
            let alpha = bad.iter().map(|&i| x[i] / (x[i] - z[i])).fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 0.0 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Err(Error::numerical("NNLS did not converge"))
}

/// Grid and penalty for [`reconstruct`]. The support is the `width × height`
/// pixel grid of spacing `pitch` centred on the sorter axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructOptions {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
    /// Weight of the smoothness penalty.
    pub lambda: f64,
    /// Moments with `m + n` above this are ignored.
    pub max_order: usize,
    /// Relative misfit above which exact moments are flagged infeasible.
    pub feasibility_tol: f64,
    /// Mean squared whitened residual above which estimated moments are
    /// flagged infeasible.
    pub feasibility_chi2: f64,
    /// Choose `lambda` by the discrepancy principle (estimated moments only).
    pub auto_lambda: bool,
}

impl ReconstructOptions {
    pub fn new(width: usize, height: usize, pitch: f64) -> Self {
        Self { width, height, pitch, lambda: 1e-3, max_order: 8, feasibility_tol: 1e-2, feasibility_chi2: 9.0, auto_lambda: false }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_auto_lambda(mut self) -> Self {
        self.auto_lambda = true;
        self
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }
}

/// Object estimate on the declared support.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// Non-negative, unit-sum intensities.
    pub grid: IntensityGrid,
    /// `‖Ax − b‖/‖b‖` over the row-normalized moment constraints.
    pub relative_residual: f64,
    /// Penalty weight actually used.
    pub lambda: f64,
    pub infeasible: bool,
    /// Mean squared whitened residual; set for estimated moments.
    pub chi2_per_constraint: Option<f64>,
    /// Number of moment constraints used.
    pub constraints: usize,
}

/// Fits non-negative grid intensities to the moment constraints with a
/// second-difference smoothness penalty (with first-difference rows at the
/// support edges, so a flat image is the only penalty-free one).
///
/// A unit-sum row is appended. Estimated moments (nonzero photon count)
/// are weighted by their standard errors; exact moments have each row
/// scaled to unit max-norm. With even moments only, odd structure along x is unobservable
/// and the solution is the mirror-symmetric one.
pub fn reconstruct(moments: &MomentSet, delta_k: f64, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    let (w, h) = (opts.width, opts.height);
    if w == 0 || h == 0 || !(opts.pitch > 0.0 && opts.pitch.is_finite()) {
        return Err(Error::domain("support grid must be non-empty with positive pitch"));
    }
    if !(opts.lambda >= 0.0 && opts.lambda.is_finite()) {
        return Err(Error::domain("regularization weight must be finite and non-negative"));
    }
    if !(delta_k > 0.0) {
        return Err(Error::domain("delta_k must be positive"));
    }
    let npix = w * h;
    let coords: Vec<(f64, f64)> = (0..npix)
        .map(|k| {
            let (i, j) = (k % w, k / w);
            ((i as f64 - 0.5 * (w as f64 - 1.0)) * opts.pitch, (j as f64 - 0.5 * (h as f64 - 1.0)) * opts.pitch)
        })
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets = Vec::new();
    let mut errors = Vec::new();
    let kmax = opts.max_order + 1;
    let wx: Vec<Vec<f64>> = coords.iter().map(|(x, _)| mode_weights(kmax, x * delta_k)).collect();
    let wy: Vec<Vec<f64>> = coords.iter().map(|(_, y)| mode_weights(kmax, y * delta_k)).collect();
    for e in moments.even.iter().filter(|e| e.m + e.n <= opts.max_order) {
        if h == 1 && e.n > 0 {
            continue;
        }
        rows.push((0..npix).map(|k| (wx[k][e.m] * wy[k][e.n]).powi(2)).collect());
        targets.push(e.value);
        errors.push(e.stderr);
    }
    for e in moments.odd.iter().filter(|e| e.m + e.n <= opts.max_order) {
        if h == 1 && e.n > 0 {
            continue;
        }
        rows.push((0..npix).map(|k| wx[k][e.m] * wx[k][e.m + 1] * wy[k][e.n].powi(2)).collect());
        targets.push(e.value);
        errors.push(e.stderr);
    }
    let constraints = rows.len();
    if constraints == 0 {
        return Err(Error::domain("no moments within the requested order"));
    }
    rows.push(vec![1.0; npix]);
    targets.push(1.0);
    // Estimated moments are whitened by their standard errors, floored at
    // the one-photon level (the sum row sits at the floor); exact ones get
    // unit max-norm rows.
    let floor = if moments.photons > 0 { 1.0 / moments.photons as f64 } else { 0.0 };
    let weighted = floor > 0.0;
    let max_norm: Vec<f64> = rows.iter().map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs()))).collect();
    let scales: Vec<f64> = (0..rows.len())
        .map(|k| if weighted { errors.get(k).copied().unwrap_or(0.0).max(floor) } else { max_norm[k] })
        .collect();
    for ((r, t), &s) in rows.iter_mut().zip(targets.iter_mut()).zip(&scales) {
        if s > 0.0 {
            r.iter_mut().for_each(|v| *v /= s);
            *t /= s;
        }
    }
    let data_rows = rows.len();
    let mut penalty: Vec<Vec<f64>> = Vec::new();
    let mut push_line = |line: &[usize]| {
        let n = line.len();
        if n < 2 {
            return;
        }
        let mut edge = |a: usize, b: usize| {
            let mut r = vec![0.0; npix];
            r[a] = 1.0;
            r[b] = -1.0;
            penalty.push(r);
        };
        edge(line[0], line[1]);
        edge(line[n - 1], line[n - 2]);
        for t in 1..n - 1 {
            let mut r = vec![0.0; npix];
            r[line[t - 1]] = 1.0;
            r[line[t]] = -2.0;
            r[line[t + 1]] = 1.0;
            penalty.push(r);
        }
    };
    for j in 0..h {
        push_line(&(0..w).map(|i| j * w + i).collect::<Vec<_>>());
    }
    for i in 0..w {
        push_line(&(0..h).map(|j| j * w + i).collect::<Vec<_>>());
    }
    let to_unit = |k: usize| if max_norm[k] > 0.0 { scales[k] / max_norm[k] } else { 0.0 };
    let fit = |lambda: f64| -> Result<Fit> {
        let extra = if lambda > 0.0 { penalty.len() } else { 0 };
        let sl = lambda.sqrt();
        let a = DMatrix::from_fn(data_rows + extra, npix, |r, c| {
            if r < data_rows {
                rows[r][c]
            } else {
                sl * penalty[r - data_rows][c]
            }
        });
        let mut b = DVector::zeros(data_rows + extra);
        b.rows_mut(0, data_rows).copy_from_slice(&targets);
        let (x, _) = nnls(&a, &b)?;
        let res = a.rows(0, data_rows) * &x - b.rows(0, data_rows);
        // Residual on unit max-norm rows whatever the weighting.
        let num: f64 = (0..data_rows).map(|k| (res[k] * to_unit(k)).powi(2)).sum();
        let den: f64 = (0..data_rows).map(|k| (b[k] * to_unit(k)).powi(2)).sum();
        Ok(Fit { chi2: res.norm_squared() / data_rows as f64, relative_residual: (num / den).sqrt(), x })
    };
    let lambda = if opts.auto_lambda {
        if !weighted {
            return Err(Error::domain("automatic regularization needs estimated moments"));
        }
        discrepancy_lambda(|l| fit(l).map(|f| f.chi2))?
    } else {
        opts.lambda
    };
    let Fit { x, chi2, relative_residual } = fit(lambda)?;
    let chi2_per_constraint = weighted.then_some(chi2);
    if x.sum() <= 0.0 {
        return Err(Error::numerical("reconstruction collapsed to zero"));
    }
    let grid = IntensityGrid::new(w, h, opts.pitch, x.iter().cloned().collect())?;
    Ok(ReconstructionResult {
        grid,
        relative_residual,
        lambda,
        infeasible: match chi2_per_constraint {
            Some(c) => c > opts.feasibility_chi2,
            None => relative_residual > opts.feasibility_tol,
        },
        chi2_per_constraint,
        constraints,
    })
}

struct Fit {
    x: DVector<f64>,
    chi2: f64,
    relative_residual: f64,
}

/// Largest weight whose mean squared whitened residual stays at or below
/// one, by bisection in `log10 λ` over `[1e-6, 1e12]`.
fn discrepancy_lambda(chi2: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (-6.0f64, 12.0f64);
    if chi2(10f64.powf(hi))? <= 1.0 {
        return Ok(10f64.powf(hi));
    }
    if chi2(10f64.powf(lo))? > 1.0 {
        return Ok(10f64.powf(lo));
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if chi2(10f64.powf(mid))? <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(10f64.powf(lo))
}
