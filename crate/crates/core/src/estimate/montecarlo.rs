use serde::{Deserialize, Serialize};

use super::mle::EstimatorSpec;
use crate::measure::{sample_law, Budget, DetectionRecord, OutcomeModel};
use crate::rng::{derive_seed, par_indexed, stream};
use crate::{Error, Result};

/// Trials per random stream; fixes the aggregation order.
const BLOCK: u64 = 4096;

/// Per-θ error statistics of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub receiver: String,
    pub photons: u64,
    pub trials: u64,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub mse: Vec<f64>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    /// Standard error of each MSE value.
    pub mse_stderr: Vec<f64>,
}

impl MCResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,mse,bias,variance,trials,N,receiver,seed,mse_stderr\n");
        for i in 0..self.theta.len() {
            s.push_str(&format!(
                "{:.10e},{:.10e},{:.10e},{:.10e},{},{},{},{},{:.10e}\n",
                self.theta[i],
                self.mse[i],
                self.bias[i],
                self.variance[i],
                self.trials,
                self.photons,
                self.receiver,
                self.seed,
                self.mse_stderr[i]
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut out = MCResult {
            receiver: String::new(),
            photons: 0,
            trials: 0,
            seed: 0,
            theta: vec![],
            mse: vec![],
            bias: vec![],
            variance: vec![],
            mse_stderr: vec![],
        };
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let row: Vec<&str> = line.split(',').collect();
            if row.len() < 8 {
                return Err(Error::parse("MC table rows need at least 8 columns"));
            }
            let f = |i: usize| -> Result<f64> {
                row[i].trim().parse().map_err(|_| Error::parse(format!("bad number {:?}", row[i])))
            };
            let u = |i: usize| -> Result<u64> {
                row[i].trim().parse().map_err(|_| Error::parse(format!("bad integer {:?}", row[i])))
            };
            out.theta.push(f(0)?);
            out.mse.push(f(1)?);
            out.bias.push(f(2)?);
            out.variance.push(f(3)?);
            out.trials = u(4)?;
            out.photons = u(5)?;
            out.receiver = row[6].trim().to_string();
            out.seed = u(7)?;
            out.mse_stderr.push(if row.len() > 8 { f(8)? } else { f64::NAN });
        }
        Ok(out)
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    e: f64,
    d2: f64,
    d4: f64,
}

/// Sums over trials of `θ̂` and powers of `d = θ̂ − θ`. The MSE is `d2/T`
/// and the variance is taken as `MSE − bias²`, so the decomposition holds by
/// construction.
fn accumulate(acc: &mut Acc, est: f64, theta: f64) {
    let d = est - theta;
    acc.e += est;
    acc.d2 += d * d;
    acc.d4 += d * d * d * d;
}

/// Empirical MSE, bias and variance of `estimator` over `trials` simulated
/// records at each `θ`, with `N` photons per record. `model` must have the
/// separation as its only parameter.
pub fn monte_carlo_mse(
    model: &dyn OutcomeModel,
    estimator: &EstimatorSpec,
    thetas: &[f64],
    photons: u64,
    trials: u64,
    seed: u64,
) -> Result<MCResult> {
    if model.param_names().len() != 1 {
        return Err(Error::domain("Monte Carlo MSE needs a one-parameter model"));
    }
    if photons == 0 || trials == 0 {
        return Err(Error::domain("photons and trials must be positive"));
    }
    estimator.validate()?;
    let laws = thetas.iter().map(|&t| model.law(&[t])).collect::<Result<Vec<_>>>()?;
    let blocks = trials.div_ceil(BLOCK);
    let label = model.label();
    let parts = par_indexed(thetas.len() * blocks as usize, |k| -> Result<Acc> {
        let (g, b) = (k / blocks as usize, k as u64 % blocks);
        let theta = thetas[g];
        let mut rng = stream(derive_seed(seed, g as u64), b);
        let outcomes = laws[g].as_discrete().map(|d| d.outcomes.clone()).unwrap_or_default();
        let mut acc = Acc::default();
        for _ in (b * BLOCK)..((b + 1) * BLOCK).min(trials) {
            let (emitted, counts, positions) = sample_law(&mut rng, &laws[g], photons, Budget::FixedN);
            let record = DetectionRecord {
                receiver: label.clone(),
                params: vec![theta],
                photons,
                budget: Budget::FixedN,
                seed,
                emitted,
                outcomes: outcomes.clone(),
                counts,
                positions,
            };
            accumulate(&mut acc, estimator.estimate(model, &record)?, theta);
        }
        Ok(acc)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = MCResult {
        receiver: label,
        photons,
        trials,
        seed,
        theta: thetas.to_vec(),
        mse: vec![],
        bias: vec![],
        variance: vec![],
        mse_stderr: vec![],
    };
    let t = trials as f64;
    for (chunk, &theta) in parts.chunks(blocks as usize).zip(thetas) {
        let mut acc = Acc::default();
        for p in chunk {
            acc.e += p.e;
            acc.d2 += p.d2;
            acc.d4 += p.d4;
        }
        let bias = acc.e / t - theta;
        let mse = acc.d2 / t;
        let var_sq = (acc.d4 / t - mse * mse).max(0.0);
        out.bias.push(bias);
        out.mse.push(mse);
        out.variance.push(mse - bias * bias);
        out.mse_stderr.push((var_sq / t).sqrt());
    }
    Ok(out)
}

/// Bias curve with its finite-difference slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCurve {
    pub theta: Vec<f64>,
    pub bias: Vec<f64>,
    /// Standard error of each bias value.
    pub stderr: Vec<f64>,
    /// Central differences inside the grid, one-sided at its ends.
    pub derivative: Vec<f64>,
}

/// Bias `b(θ) = E[θ̂] − θ` and `db/dθ` from a Monte Carlo result.
pub fn empirical_bias(mc: &MCResult) -> Result<BiasCurve> {
    let n = mc.theta.len();
    if n < 2 {
        return Err(Error::domain("bias derivative needs at least two grid points"));
    }
    if mc.theta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("θ grid must be strictly increasing"));
    }
    let th = &mc.theta;
    let b = &mc.bias;
    let derivative = (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (b[r] - b[l]) / (th[r] - th[l])
        })
        .collect();
    let stderr = mc.variance.iter().map(|v| (v / mc.trials as f64).sqrt()).collect();
    Ok(BiasCurve { theta: th.clone(), bias: b.clone(), stderr, derivative })
}

/// Exact error statistics of the closed-form SPADE estimator for an aligned
/// equal Gaussian pair, from the Poisson law of the mode-order sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpadeErrorExact {
    pub mean: f64,
    pub mse: f64,
    pub bias: f64,
    /// `db/dθ`.
    pub bias_derivative: f64,
}

/// `Σ_n [(2/Δk)√(n/N) − θ]²·Poisson(n; NΔk²θ²/4)` and companions.
pub fn spade_mle_mse_exact(theta: f64, photons: u64, delta_k: f64) -> Result<SpadeErrorExact> {
    if !(theta >= 0.0 && delta_k > 0.0) || photons == 0 {
        return Err(Error::domain("need θ ≥ 0, Δk > 0 and N > 0"));
    }
    let nf = photons as f64;
    let lam = nf * (theta * delta_k).powi(2) / 4.0;
    let est = |n: f64| 2.0 / delta_k * (n / nf).sqrt();
    if lam == 0.0 {
        // Only n = 0 occurs; dE/dλ at λ = 0 is est(1) and dλ/dθ = 0.
        return Ok(SpadeErrorExact { mean: 0.0, mse: 0.0, bias: 0.0, bias_derivative: -1.0 });
    }
    let hi = (lam + 12.0 * lam.sqrt() + 40.0).ceil() as u64;
    let lo = (lam - 12.0 * lam.sqrt() - 40.0).max(0.0).floor() as u64;
    let (mut mean, mut mse, mut dmean) = (0.0, 0.0, 0.0);
    for n in lo..=hi {
        let nf_ = n as f64;
        let w = (nf_ * lam.ln() - lam - statrs::function::gamma::ln_gamma(nf_ + 1.0)).exp();
        let e = est(nf_);
        mean += w * e;
        mse += w * (e - theta).powi(2);
        dmean += w * (est(nf_ + 1.0) - e);
    }
    let dlam = nf * delta_k * delta_k * theta / 2.0;
    Ok(SpadeErrorExact { mean, mse, bias: mean - theta, bias_derivative: dmean * dlam - 1.0 })
}
