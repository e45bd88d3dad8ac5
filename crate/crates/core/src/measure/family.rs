use serde::{Deserialize, Serialize};

use crate::scene::{Emitter, TwoPointScene};
use crate::{Error, Result};

/// Maps a parameter vector to the emitters of an incoherent scene.
pub trait SceneFamily: Send + Sync {
    fn param_names(&self) -> Vec<String>;
    fn emitters(&self, params: &[f64]) -> Result<Vec<Emitter>>;
}

/// Free parameters of a two-point scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairParam {
    Centroid,
    Separation,
    Brightness,
}

/// Two-point scene with some parameters left free.
///
/// Negative separations are accepted and mirror the pair, so central
/// differences at `θ = 0` are well defined.
#[derive(Debug, Clone)]
pub struct PairFamily {
    pub base: TwoPointScene,
    pub free: Vec<PairParam>,
}

impl PairFamily {
    pub fn new(base: TwoPointScene, free: &[PairParam]) -> Self {
        Self { base, free: free.to_vec() }
    }

    /// Separation as the only free parameter.
    pub fn separation(base: TwoPointScene) -> Self {
        Self::new(base, &[PairParam::Separation])
    }
}

impl SceneFamily for PairFamily {
    fn param_names(&self) -> Vec<String> {
        self.free
            .iter()
            .map(|p| match p {
                PairParam::Centroid => "centroid",
                PairParam::Separation => "theta",
                PairParam::Brightness => "brightness",
            })
            .map(String::from)
            .collect()
    }

    fn emitters(&self, params: &[f64]) -> Result<Vec<Emitter>> {
        if params.len() != self.free.len() {
            return Err(Error::domain(format!("expected {} parameters, got {}", self.free.len(), params.len())));
        }
        let (mut c, mut t, mut b) = (self.base.centroid, self.base.separation, self.base.brightness);
        for (p, v) in self.free.iter().zip(params) {
            match p {
                PairParam::Centroid => c = *v,
                PairParam::Separation => t = *v,
                PairParam::Brightness => b = *v,
            }
        }
        if !(0.0..=1.0).contains(&b) || !t.is_finite() || !c.is_finite() {
            return Err(Error::domain("pair parameters out of range"));
        }
        Ok(vec![Emitter::new(1.0 - b, c - 0.5 * t), Emitter::new(b, c + 0.5 * t)])
    }
}

/// A single point source with unknown position.
#[derive(Debug, Clone, Copy, Default)]
pub struct Localization;

impl SceneFamily for Localization {
    fn param_names(&self) -> Vec<String> {
        vec!["x0".into()]
    }

    fn emitters(&self, params: &[f64]) -> Result<Vec<Emitter>> {
        match params {
            [x] if x.is_finite() => Ok(vec![Emitter::new(1.0, *x)]),
            _ => Err(Error::domain("localization takes one finite parameter")),
        }
    }
}

/// A scene with no free parameters.
#[derive(Debug, Clone)]
pub struct FixedScene(pub Vec<Emitter>);

impl SceneFamily for FixedScene {
    fn param_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn emitters(&self, _params: &[f64]) -> Result<Vec<Emitter>> {
        Ok(self.0.clone())
    }
}
