use super::law::{DiscreteLaw, Law, Outcome, OutcomeModel, Statistics};
use crate::optics::{ModeBasis, Psf};
use crate::scene::CoherentPairScene;
use crate::{Error, Result};

/// How mode intensities of a partially coherent pair are normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Mean counts per emitted photon with Poisson statistics; the total
    /// detected energy varies with separation.
    #[default]
    PerEmitted,
    /// Conditioned on detection: multinomial over modes.
    PerDetected,
}

/// Mode-sorting law for two partially coherent point sources, parametrized by
/// separation. Each source emits half of the light on average.
#[derive(Debug, Clone)]
pub struct CoherentPairModel {
    pub scene: CoherentPairScene,
    pub psf: Psf,
    pub basis: ModeBasis,
    pub offset: f64,
    pub normalization: Normalization,
}

impl CoherentPairModel {
    pub fn new(scene: CoherentPairScene, psf: Psf, basis: ModeBasis) -> Result<Self> {
        if scene.gamma.norm() > 1.0 + 1e-12 {
            return Err(Error::domain("|gamma| must not exceed 1"));
        }
        basis.check_matches(&psf)?;
        Ok(Self { scene, psf, basis, offset: 0.0, normalization: Normalization::PerEmitted })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    /// Mean mode intensities per emitted photon, the bucket last.
    pub fn intensities(&self, theta: f64) -> Result<DiscreteLaw> {
        let g = self.scene.gamma.re;
        let c0 = self.scene.centroid - self.offset;
        let a = self.basis.amplitudes(&self.psf, c0 - 0.5 * theta)?;
        let b = self.basis.amplitudes(&self.psf, c0 + 0.5 * theta)?;
        let mut outcomes = Vec::with_capacity(a.len() + 1);
        let mut probs = Vec::with_capacity(a.len() + 1);
        for (n, (an, bn)) in a.iter().zip(&b).enumerate() {
            outcomes.push(Outcome::Mode(n));
            probs.push(0.5 * (an * an + bn * bn + 2.0 * g * an * bn));
        }
        let total = 1.0 + g * self.psf.overlap(theta);
        let bucket = (total - probs.iter().sum::<f64>()).max(0.0);
        outcomes.push(Outcome::Bucket);
        probs.push(bucket);
        let mut law = DiscreteLaw::new(outcomes, probs, Statistics::Poisson)?;
        law.leakage_warning = bucket > 1e-3 * total.max(1e-300);
        Ok(law)
    }

    /// Total detected energy per emitted photon, `1 + Re γ · C(θ)`.
    pub fn detected_energy(&self, theta: f64) -> f64 {
        1.0 + self.scene.gamma.re * self.psf.overlap(theta)
    }
}

impl OutcomeModel for CoherentPairModel {
    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn law(&self, params: &[f64]) -> Result<Law> {
        let [theta] = params else {
            return Err(Error::domain("coherent pair model takes one parameter"));
        };
        let law = self.intensities(*theta)?;
        match self.normalization {
            Normalization::PerEmitted => Ok(Law::Discrete(law)),
            Normalization::PerDetected => {
                let t = law.total();
                if t <= 0.0 {
                    return Err(Error::domain("no light is detected at this separation"));
                }
                let probs = law.probs.iter().map(|p| p / t).collect();
                let mut out = DiscreteLaw::new(law.outcomes, probs, Statistics::Multinomial)?;
                out.leakage_warning = law.leakage_warning;
                Ok(Law::Discrete(out))
            }
        }
    }

    fn label(&self) -> String {
        "spade-coherent".into()
    }
}

/// Mode intensities of a partially coherent pair with the separation free.
pub fn coherent_pair_pmf(scene: &CoherentPairScene, psf: &Psf, basis: &ModeBasis) -> Result<CoherentPairModel> {
    CoherentPairModel::new(*scene, psf.clone(), basis.clone())
}
