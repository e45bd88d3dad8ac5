//! Least-squares line fits used for scaling-law and exponent extraction.

use crate::{Error, Result};

/// Slope and intercept of a fitted line with their standard errors.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Weighted least squares of `y` on `x`; `sigma` are per-point standard
/// deviations (`None` means unit weights).
pub fn fit_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("line fit needs at least two matching points"));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.len() != x.len() {
                return Err(Error::domain("sigma length mismatch"));
            }
            s.iter().map(|v| if *v > 0.0 { 1.0 / (v * v) } else { 1.0 }).collect()
        }
        None => vec![1.0; x.len()],
    };
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * (x - xm) * (y - ym)).sum();
    if sxx <= 0.0 {
        return Err(Error::domain("line fit abscissae are degenerate"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let (slope_var, icpt_var) = if sigma.is_some() {
        (1.0 / sxx, 1.0 / sw + xm * xm / sxx)
    } else {
        let dof = (x.len() as f64 - 2.0).max(1.0);
        let rss: f64 = x.iter().zip(y).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let s2 = rss / dof;
        (s2 / sxx, s2 * (1.0 / sw + xm * xm / sxx))
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: slope_var.sqrt(),
        intercept_stderr: icpt_var.sqrt(),
    })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| *v <= 0.0) {
        return Err(Error::domain("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly, None)?.slope)
}

/// Leading coefficient `c` of `y ≈ c·x^p (1 + a·x^q)`, obtained by fitting
/// `y/x^p` linearly in `x^q` and reading the intercept.
pub fn leading_coefficient(x: &[f64], y: &[f64], p: f64, q: f64) -> Result<f64> {
    let u: Vec<f64> = x.iter().map(|v| v.powf(q)).collect();
    let r: Vec<f64> = x.iter().zip(y).map(|(x, y)| y / x.powf(p)).collect();
    Ok(fit_line(&u, &r, None)?.intercept)
}
