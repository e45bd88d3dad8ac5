use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::law::{Law, Outcome, OutcomeModel, Statistics};
use crate::rng::stream;
use crate::{Error, Result};

/// Photon budget convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// Exactly `N` photons reach the receiver.
    #[default]
    FixedN,
    /// The photon number is Poisson with mean `N`.
    PoissonN,
}

/// Counts of `n` categorical draws with (possibly unnormalised) weights,
/// sampled by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, weights: &[f64]) -> Vec<u64> {
    let mut left = n;
    let mut mass: f64 = weights.iter().sum();
    let mut out = vec![0; weights.len()];
    for (i, &w) in weights.iter().enumerate() {
        if left == 0 || mass <= 0.0 {
            break;
        }
        let k = if i + 1 == weights.len() {
            left
        } else {
            let p = (w / mass).clamp(0.0, 1.0);
            Binomial::new(left, p).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out[i] = k;
        left -= k;
        mass -= w;
    }
    out
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// One simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub receiver: String,
    pub params: Vec<f64>,
    /// Nominal photon number `N`.
    pub photons: u64,
    pub budget: Budget,
    pub seed: u64,
    /// Photons actually entering the receiver (equals `photons` for fixed-N).
    pub emitted: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<Outcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<f64>,
}

impl DetectionRecord {
    /// Detected photons, excluding any discard channel.
    pub fn detected(&self) -> u64 {
        if self.counts.is_empty() {
            return self.positions.len() as u64;
        }
        self.outcomes.iter().zip(&self.counts).filter(|(o, _)| !o.is_discard()).map(|(_, c)| c).sum()
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        self.outcomes.iter().position(|o| *o == outcome).map_or(0, |i| self.counts[i])
    }

    /// One JSON object on a single line.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::parse(format!("detection record: {e}")))
    }
}

/// Draws one record from an already evaluated law.
pub fn sample_law<R: Rng + ?Sized>(rng: &mut R, law: &Law, n: u64, budget: Budget) -> (u64, Vec<u64>, Vec<f64>) {
    let emitted = match budget {
        Budget::FixedN => n,
        Budget::PoissonN => poisson_count(rng, n as f64),
    };
    match law {
        Law::Discrete(d) => {
            let counts = match d.statistics {
                Statistics::Multinomial => multinomial(rng, emitted, &d.probs),
                Statistics::Poisson => {
                    // Independent detectors: counts are Poisson with the law's
                    // mean per photon regardless of the budget convention.
                    d.probs.iter().map(|p| poisson_count(rng, p * n as f64)).collect()
                }
            };
            (emitted, counts, Vec::new())
        }
        Law::Continuous(c) => (emitted, Vec::new(), c.sample_positions(rng, emitted)),
    }
}

/// Simulates `N` photons through `model` at `params`, deterministically in `seed`.
pub fn sample_record(
    model: &dyn OutcomeModel,
    params: &[f64],
    n: u64,
    budget: Budget,
    seed: u64,
) -> Result<DetectionRecord> {
    if n == 0 {
        return Err(Error::domain("photon number must be positive"));
    }
    let law = model.law(params)?;
    let mut rng = stream(seed, 0);
    let (emitted, counts, positions) = sample_law(&mut rng, &law, n, budget);
    let outcomes = law.as_discrete().map(|d| d.outcomes.clone()).unwrap_or_default();
    Ok(DetectionRecord {
        receiver: model.label(),
        params: params.to_vec(),
        photons: n,
        budget,
        seed,
        emitted,
        outcomes,
        counts,
        positions,
    })
}
