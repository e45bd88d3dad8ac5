use std::fmt::Write as _;

use nalgebra::Matrix3;

use crate::{Error, Result};

/// `1/(N·I)`.
pub fn crb(fisher: f64, photons: f64) -> f64 {
    1.0 / (photons * fisher)
}

/// Lower bound on the MSE of an estimator with bias `b` and bias slope `db`:
/// `(1 + b')²/(N·I) + b²`.
pub fn bias_corrected_crb(bias: f64, bias_derivative: f64, fisher: f64, photons: f64, _theta: f64) -> f64 {
    let lead = (1.0 + bias_derivative).powi(2);
    let var = if lead == 0.0 { 0.0 } else { lead / (photons * fisher) };
    var + bias * bias
}

/// Bayesian bound `1/(N·E_q[I] + J)`.
pub fn van_trees_bound(prior_info: f64, mean_fisher: f64, photons: f64) -> Result<f64> {
    if prior_info < 0.0 || mean_fisher < 0.0 || photons < 0.0 {
        return Err(Error::domain("van Trees inputs must be non-negative"));
    }
    Ok(1.0 / (photons * mean_fisher + prior_info))
}

/// Fisher information `J = E[(∂ ln q)²] = 1/τ²` of a Gaussian prior.
pub fn gaussian_prior_information(tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain("prior width must be positive"));
    }
    Ok(1.0 / (tau * tau))
}

/// Modified information `θ²·I` governing the relative error.
pub fn modified_fi_relative(fisher: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::domain("relative error is undefined at zero separation"));
    }
    Ok(theta * theta * fisher)
}

/// Three-dimensional localization bound for a Gaussian aperture:
/// `(1/N)·diag(1/Δk², 1/Δk², k²/Δk⁴)`.
pub fn qcrb_3d(delta_k: f64, wavenumber: f64, photons: f64) -> Result<Matrix3<f64>> {
    if !(delta_k > 0.0 && wavenumber > 0.0 && photons > 0.0) {
        return Err(Error::domain("qcrb_3d inputs must be positive"));
    }
    let t = 1.0 / (delta_k * delta_k);
    let z = wavenumber * wavenumber / delta_k.powi(4);
    Ok(Matrix3::from_diagonal(&nalgebra::Vector3::new(t, t, z)) / photons)
}

/// One row of a bound table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub theta: f64,
    pub crb_direct: f64,
    pub crb_receiver: f64,
    pub qcrb: f64,
    pub bias_corrected: Option<f64>,
    pub van_trees: Option<f64>,
}

/// Bounds on separation estimation over a grid, with the method that
/// produced each column.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub photons: f64,
    pub rows: Vec<BoundRow>,
    /// `(column, method)` pairs.
    pub provenance: Vec<(String, String)>,
}

impl BoundReport {
    /// Comma-separated table with `#` provenance header lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# N = {}", self.photons);
        for (col, how) in &self.provenance {
            let _ = writeln!(s, "# {col}: {how}");
        }
        s.push_str("theta,crb_direct,crb_receiver,qcrb,bias_corrected,van_trees\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_num(r.theta),
                fmt_num(r.crb_direct),
                fmt_num(r.crb_receiver),
                fmt_num(r.qcrb),
                r.bias_corrected.map_or("nan".into(), fmt_num),
                r.van_trees.map_or("nan".into(), fmt_num),
            );
        }
        s
    }
}

/// Scientific notation with eight fractional digits; infinities as `inf`.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_estimator_bound_is_theta_squared() {
        assert_eq!(bias_corrected_crb(-0.3, -1.0, 2.0, 100.0, 0.3), 0.09);
    }

    #[test]
    fn van_trees_gaussian_prior() {
        let j = gaussian_prior_information(1.0).unwrap();
        assert!((van_trees_bound(j, 1.0, 100.0).unwrap() - 1.0 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn qcrb_3d_values() {
        let m = qcrb_3d(1.0, 10.0, 1.0).unwrap();
        assert_eq!(m, Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 100.0)));
    }

    #[test]
    fn modified_fi_rejects_zero() {
        assert!(modified_fi_relative(1.0, 0.0).is_err());
    }
}
