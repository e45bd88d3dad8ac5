use serde::{Deserialize, Serialize};

use crate::measure::{DetectionRecord, Law, Outcome, OutcomeModel};
use crate::{Error, Result};

/// Separation estimate from an aligned Hermite-Gaussian sorter:
/// `θ̂ = (2/Δk)·√(L/N)` with `L = Σ n·count_n`.
///
/// For an equal Gaussian pair every photon's mode index is Poisson with mean
/// `Q = (θΔk/2)²`, so `L` is Poisson with mean `NQ` and `L/N` is the moment
/// inversion of `Q`. The bucket counts as index `M + 1`; parity outcomes count
/// as 0 (even) and 1 (odd). Returns 0 when no photon leaves mode 0.
pub fn spade_mle_separation(record: &DetectionRecord, delta_k: f64) -> Result<f64> {
    if !(delta_k > 0.0) {
        return Err(Error::domain("delta_k must be positive"));
    }
    let m = record
        .outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Mode(n) => Some(*n),
            Outcome::Mode2(i, j) => Some(i + j),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut l = 0u64;
    for (o, &c) in record.outcomes.iter().zip(&record.counts) {
        let idx = match o {
            Outcome::Mode(n) => *n as u64,
            Outcome::Mode2(i, j) => (i + j) as u64,
            Outcome::Bucket => m as u64 + 1,
            Outcome::Even => 0,
            Outcome::Odd => 1,
            other => return Err(Error::domain(format!("outcome {other} has no mode order"))),
        };
        l += idx * c;
    }
    if record.photons == 0 {
        return Err(Error::domain("record has no photons"));
    }
    Ok(2.0 / delta_k * (l as f64 / record.photons as f64).sqrt())
}

/// Mean detected position; the MLE of a Gaussian-PSF centroid.
pub fn sample_mean_centroid(record: &DetectionRecord) -> Result<f64> {
    if record.positions.is_empty() {
        return Err(Error::domain("record has no position samples"));
    }
    Ok(record.positions.iter().sum::<f64>() / record.positions.len() as f64)
}

/// Log-likelihood of a record under a law.
pub fn log_likelihood(law: &Law, record: &DetectionRecord) -> Result<f64> {
    match law {
        Law::Discrete(d) => {
            let mut ll = 0.0;
            for (o, &c) in record.outcomes.iter().zip(&record.counts) {
                if c == 0 {
                    continue;
                }
                let p = d.prob(*o).ok_or_else(|| Error::domain(format!("outcome {o} not in law")))?;
                if p <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                ll += c as f64 * p.ln();
            }
            if d.statistics == crate::measure::Statistics::Poisson {
                ll -= record.photons as f64 * d.total();
            }
            Ok(ll)
        }
        Law::Continuous(c) => {
            let mut ll = 0.0;
            for &x in &record.positions {
                let p = c.density(x);
                if p <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                ll += p.ln();
            }
            Ok(ll)
        }
    }
}

/// Estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Moment inversion of the mode-order sum (see [`spade_mle_separation`]).
    SpadeClosedForm,
    /// Likelihood maximization for direct-imaging records.
    DirectMleNumeric,
    /// Likelihood maximization for any outcome model.
    GenericMleNumeric,
    /// Mean of detected positions.
    SampleMeanCentroid,
    /// Always returns the given value.
    Constant(f64),
}

/// Estimator choice with search bounds and tolerance for numeric MLEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Per-parameter `(lo, hi)`.
    pub bounds: Vec<(f64, f64)>,
    pub tolerance: f64,
    /// Needed by the closed-form SPADE estimator.
    pub delta_k: f64,
}

impl EstimatorSpec {
    /// Default separation search range `[0, 6/Δk]`.
    pub fn new(kind: EstimatorKind, delta_k: f64) -> Self {
        Self { kind, bounds: vec![(0.0, 6.0 / delta_k)], tolerance: 1e-6 / delta_k, delta_k }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.iter().any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::domain("search bounds must be finite and increasing"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        Ok(())
    }

    /// Scalar estimate from a record; numeric kinds fit `model`.
    pub fn estimate(&self, model: &dyn OutcomeModel, record: &DetectionRecord) -> Result<f64> {
        match self.kind {
            EstimatorKind::SpadeClosedForm => spade_mle_separation(record, self.delta_k),
            EstimatorKind::SampleMeanCentroid => sample_mean_centroid(record),
            EstimatorKind::Constant(v) => Ok(v),
            EstimatorKind::DirectMleNumeric | EstimatorKind::GenericMleNumeric => {
                Ok(numeric_mle(record, model, self)?.params[0])
            }
        }
    }
}

/// Result of a numeric likelihood maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    /// The likelihood was flat over the search box.
    pub degenerate: bool,
}

const SCAN_POINTS: usize = 61;

fn maximize_1d<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, bool)> {
    let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let (mut best, mut vbest) = (0, f64::NEG_INFINITY);
    let mut vmin = f64::INFINITY;
    for (i, &v) in vals.iter().enumerate() {
        if v > vbest {
            best = i;
            vbest = v;
        }
        vmin = vmin.min(v);
    }
    if !vbest.is_finite() {
        return Err(Error::numerical("log-likelihood is not finite anywhere in the search box"));
    }
    if vbest - vmin <= 1e-12 * vbest.abs().max(1.0) {
        return Ok((lo, vals[0], true));
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(SCAN_POINTS - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        }
    }
    let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if v >= vbest {
        Ok((x, v, false))
    } else {
        Ok((xs[best], vbest, false))
    }
}

/// Bounded maximum-likelihood fit: grid scan plus golden-section refinement
/// per parameter, cycling coordinates for multi-parameter models.
pub fn numeric_mle(record: &DetectionRecord, model: &dyn OutcomeModel, spec: &EstimatorSpec) -> Result<MleResult> {
    spec.validate()?;
    let k = model.param_names().len();
    if spec.bounds.len() != k {
        return Err(Error::domain(format!("need {k} search intervals, got {}", spec.bounds.len())));
    }
    let ll = |p: &[f64]| -> Result<f64> {
        match model.law(p) {
            Ok(law) => log_likelihood(&law, record),
            Err(Error::Domain(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let mut p: Vec<f64> = spec.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let mut value = f64::NEG_INFINITY;
    let mut degenerate = true;
    let sweeps = if k == 1 { 1 } else { 20 };
    for _ in 0..sweeps {
        let before = p.clone();
        for j in 0..k {
            let (lo, hi) = spec.bounds[j];
            let (x, v, flat) = maximize_1d(
                |x| {
                    let mut q = p.clone();
                    q[j] = x;
                    ll(&q)
                },
                lo,
                hi,
                spec.tolerance,
            )?;
            p[j] = x;
            value = v;
            degenerate &= flat;
        }
        if p.iter().zip(&before).all(|(a, b)| (a - b).abs() <= spec.tolerance) {
            break;
        }
    }
    Ok(MleResult { params: p, log_likelihood: value, degenerate })
}
