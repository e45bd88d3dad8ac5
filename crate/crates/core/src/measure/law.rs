use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::optics::Psf;
use crate::{Error, Result};

/// Label of a discrete measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// One-dimensional mode index.
    Mode(usize),
    /// Two-dimensional mode `(x index, y index)`.
    Mode2(usize, usize),
    /// Interleaved superposition `(ψ_lo ± ψ_{lo+1})/√2` along x, times HG `n` along y.
    Pair { lo: usize, plus: bool, n: usize },
    Even,
    Odd,
    Click,
    /// Everything beyond the retained modes.
    Bucket,
    /// Light rejected before detection.
    Discard,
}

impl Outcome {
    pub fn is_discard(&self) -> bool {
        matches!(self, Outcome::Discard)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Mode(n) => write!(f, "mode{n}"),
            Outcome::Mode2(m, n) => write!(f, "mode{m}_{n}"),
            Outcome::Pair { lo, plus, n } => write!(f, "pair{lo}{}_{n}", if *plus { "+" } else { "-" }),
            Outcome::Even => write!(f, "even"),
            Outcome::Odd => write!(f, "odd"),
            Outcome::Click => write!(f, "click"),
            Outcome::Bucket => write!(f, "bucket"),
            Outcome::Discard => write!(f, "discard"),
        }
    }
}

/// Counting statistics of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    /// Each photon lands in exactly one outcome; probabilities sum to one.
    Multinomial,
    /// Independent Poisson counts with the given means per emitted photon;
    /// the sum may differ from one (interference changes the detected energy).
    Poisson,
}

/// Probabilities over labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    pub outcomes: Vec<Outcome>,
    pub probs: Vec<f64>,
    pub statistics: Statistics,
    /// Set when more than 1e-3 of the light falls outside the retained modes.
    pub leakage_warning: bool,
}

impl DiscreteLaw {
    pub fn new(outcomes: Vec<Outcome>, mut probs: Vec<f64>, statistics: Statistics) -> Result<Self> {
        if outcomes.len() != probs.len() || outcomes.is_empty() {
            return Err(Error::domain("outcome labels and probabilities differ in length"));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::numerical(format!("invalid outcome probability {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        if statistics == Statistics::Multinomial {
            let s: f64 = probs.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::numerical(format!("multinomial probabilities sum to {s}")));
            }
        }
        Ok(Self { outcomes, probs, statistics, leakage_warning: false })
    }

    /// Probability of being detected at all (excludes the discard channel).
    pub fn detected_fraction(&self) -> f64 {
        self.outcomes.iter().zip(&self.probs).filter(|(o, _)| !o.is_discard()).map(|(_, p)| p).sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob(&self, outcome: Outcome) -> Option<f64> {
        self.outcomes.iter().position(|o| *o == outcome).map(|i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Keeps only the listed outcomes. Valid for Poisson statistics, where
    /// ignoring some detectors leaves a valid model for the rest.
    pub fn select(&self, keep: &[Outcome]) -> Result<Self> {
        if self.statistics != Statistics::Poisson {
            return Err(Error::unsupported("outcome selection needs Poisson statistics"));
        }
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for k in keep {
            let p = self.prob(*k).ok_or_else(|| Error::domain(format!("outcome {k} not present")))?;
            outcomes.push(*k);
            probs.push(p);
        }
        Ok(Self { outcomes, probs, statistics: Statistics::Poisson, leakage_warning: self.leakage_warning })
    }
}

/// Mixture of displaced PSF intensities: the position density of a photon
/// under direct imaging.
#[derive(Debug, Clone)]
pub struct ContinuousLaw {
    psf: Psf,
    /// `(weight, position)`
    components: Vec<(f64, f64)>,
}

impl ContinuousLaw {
    pub fn new(psf: Psf, components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("density needs at least one component"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| c.0 < 0.0 || !c.1.is_finite()) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain("density weights must be non-negative and sum to one"));
        }
        Ok(Self { psf, components })
    }

    pub fn psf(&self) -> &Psf {
        &self.psf
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, c)| w * self.psf.intensity(x - c)).sum()
    }

    /// Quadrature breakpoints covering the support of this density.
    pub fn breakpoints(&self) -> Vec<f64> {
        let centers: Vec<f64> = self.components.iter().map(|c| c.1).collect();
        self.psf.window(&centers)
    }

    /// Breakpoints covering the union of several densities on one PSF.
    pub fn joint_breakpoints(laws: &[&ContinuousLaw]) -> Vec<f64> {
        let centers: Vec<f64> = laws.iter().flat_map(|l| l.components.iter().map(|c| c.1)).collect();
        laws[0].psf.window(&centers)
    }

    pub fn sample_positions<R: Rng + ?Sized>(&self, rng: &mut R, n: u64) -> Vec<f64> {
        let weights: Vec<f64> = self.components.iter().map(|c| c.0).collect();
        let counts = super::sampling::multinomial(rng, n, &weights);
        let mut out = Vec::with_capacity(n as usize);
        for ((_, c), k) in self.components.iter().zip(counts) {
            for _ in 0..k {
                out.push(c + self.psf.sample_position(rng));
            }
        }
        out
    }
}

/// Outcome law of a measurement at fixed parameters.
#[derive(Debug, Clone)]
pub enum Law {
    Discrete(DiscreteLaw),
    Continuous(ContinuousLaw),
}

impl Law {
    pub fn as_discrete(&self) -> Option<&DiscreteLaw> {
        match self {
            Law::Discrete(d) => Some(d),
            Law::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&ContinuousLaw> {
        match self {
            Law::Continuous(c) => Some(c),
            Law::Discrete(_) => None,
        }
    }

    pub fn detected_fraction(&self) -> f64 {
        match self {
            Law::Discrete(d) => d.detected_fraction(),
            Law::Continuous(_) => 1.0,
        }
    }
}

/// A parametric outcome law (the measurement model seen by estimators and
/// information calculations).
pub trait OutcomeModel: Send + Sync {
    fn param_names(&self) -> Vec<String>;
    fn law(&self, params: &[f64]) -> Result<Law>;
    /// Short identifier of the receiver used in records and reports.
    fn label(&self) -> String;
}

/// Outcome model defined by a closure.
pub struct FnModel<F> {
    names: Vec<String>,
    label: String,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> Result<Law> + Send + Sync,
{
    pub fn new(label: impl Into<String>, names: &[&str], f: F) -> Self {
        Self { names: names.iter().map(|s| s.to_string()).collect(), label: label.into(), f }
    }
}

impl<F> OutcomeModel for FnModel<F>
where
    F: Fn(&[f64]) -> Result<Law> + Send + Sync,
{
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn law(&self, params: &[f64]) -> Result<Law> {
        (self.f)(params)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
