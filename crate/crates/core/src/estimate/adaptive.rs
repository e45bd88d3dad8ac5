use serde::Serialize;

use super::mle::spade_mle_separation;
use crate::measure::{sample_law, Budget, DetectionRecord, Receiver};
use crate::optics::{ModeBasis, Psf, PsfKind};
use crate::rng::{derive_seed, par_indexed, stream};
use crate::scene::{mixture_components, TwoPointScene};
use crate::{Error, Result};

/// Budget split of the two-stage protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveConfig {
    pub photons: u64,
    /// Fraction of photons spent on direct imaging.
    pub split: f64,
    /// Skips stage 1 and aligns the sorter here with the full budget.
    pub known_centroid: Option<f64>,
    /// Highest resolved mode of the sorter.
    pub cutoff: usize,
}

impl AdaptiveConfig {
    /// Equal split.
    pub fn new(photons: u64) -> Self {
        Self { photons, split: 0.5, known_centroid: None, cutoff: 20 }
    }

    pub fn with_split(mut self, split: f64) -> Self {
        self.split = split;
        self
    }

    pub fn with_known_centroid(mut self, c: f64) -> Self {
        self.known_centroid = Some(c);
        self
    }

    fn stage_photons(&self) -> Result<(u64, u64)> {
        if self.photons == 0 {
            return Err(Error::domain("photon budget must be positive"));
        }
        if self.known_centroid.is_some() {
            return Ok((0, self.photons));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::domain("split fraction must lie in (0, 1)"));
        }
        let n1 = ((self.split * self.photons as f64).round() as u64).clamp(1, self.photons);
        if n1 == self.photons {
            return Err(Error::domain("split leaves no photons for the sorter"));
        }
        Ok((n1, self.photons - n1))
    }
}

/// Estimates from one run of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveEstimate {
    pub centroid: f64,
    pub theta: f64,
    pub stage1_photons: u64,
    pub stage2_photons: u64,
}

fn sorter_basis(psf: &Psf, cutoff: usize) -> Result<ModeBasis> {
    match psf.kind() {
        PsfKind::Gaussian => ModeBasis::hermite_gaussian(psf.width_param(), cutoff),
        _ => ModeBasis::psf_adapted(psf, cutoff),
    }
}

struct Protocol {
    emitters: Vec<crate::scene::Emitter>,
    direct: crate::measure::Law,
    basis: ModeBasis,
    stages: (u64, u64),
    delta_k: f64,
}

impl Protocol {
    fn new(scene: &TwoPointScene, psf: &Psf, config: &AdaptiveConfig) -> Result<Self> {
        let emitters = mixture_components(scene);
        Ok(Self {
            direct: Receiver::direct().law(psf, &emitters)?,
            basis: sorter_basis(psf, config.cutoff)?,
            stages: config.stage_photons()?,
            delta_k: psf.delta_k(),
            emitters,
        })
    }

    fn run<R: rand::Rng + ?Sized>(&self, rng: &mut R, psf: &Psf, config: &AdaptiveConfig) -> Result<AdaptiveEstimate> {
        let (n1, n2) = self.stages;
        let centroid = match config.known_centroid {
            Some(c) => c,
            None => {
                let (_, _, pos) = sample_law(rng, &self.direct, n1, Budget::FixedN);
                pos.iter().sum::<f64>() / pos.len() as f64
            }
        };
        let law = Receiver::spade(self.basis.clone()).with_offset(centroid).law(psf, &self.emitters)?;
        let (emitted, counts, _) = sample_law(rng, &law, n2, Budget::FixedN);
        let record = DetectionRecord {
            receiver: "spade".into(),
            params: vec![],
            photons: n2,
            budget: Budget::FixedN,
            seed: 0,
            emitted,
            outcomes: law.as_discrete().map(|d| d.outcomes.clone()).unwrap_or_default(),
            counts,
            positions: vec![],
        };
        let theta = spade_mle_separation(&record, self.delta_k)?;
        Ok(AdaptiveEstimate { centroid, theta, stage1_photons: n1, stage2_photons: n2 })
    }
}

/// Direct imaging with a fraction `split` of the photons locates the
/// centroid by its sample mean; a sorter aligned there spends the rest on
/// the separation.
pub fn two_stage_adaptive(
    scene: &TwoPointScene,
    psf: &Psf,
    config: &AdaptiveConfig,
    seed: u64,
) -> Result<AdaptiveEstimate> {
    let p = Protocol::new(scene, psf, config)?;
    p.run(&mut stream(seed, 0), psf, config)
}

/// Separation error of the protocol over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveMse {
    pub mse: f64,
    pub mse_stderr: f64,
    pub bias: f64,
    pub centroid_mse: f64,
    pub trials: u64,
}

const BLOCK: u64 = 1024;

/// Monte Carlo MSE of [`two_stage_adaptive`].
pub fn adaptive_mse(
    scene: &TwoPointScene,
    psf: &Psf,
    config: &AdaptiveConfig,
    trials: u64,
    seed: u64,
) -> Result<AdaptiveMse> {
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    let p = Protocol::new(scene, psf, config)?;
    let blocks = trials.div_ceil(BLOCK);
    let parts = par_indexed(blocks as usize, |b| -> Result<[f64; 4]> {
        let b = b as u64;
        let mut rng = stream(derive_seed(seed, 1), b);
        let mut acc = [0.0; 4];
        for _ in (b * BLOCK)..((b + 1) * BLOCK).min(trials) {
            let e = p.run(&mut rng, psf, config)?;
            let d = e.theta - scene.separation;
            acc[0] += d;
            acc[1] += d * d;
            acc[2] += d.powi(4);
            acc[3] += (e.centroid - scene.centroid).powi(2);
        }
        Ok(acc)
    });
    let mut acc = [0.0; 4];
    for part in parts {
        for (a, v) in acc.iter_mut().zip(part?) {
            *a += v;
        }
    }
    let t = trials as f64;
    let mse = acc[1] / t;
    Ok(AdaptiveMse {
        mse,
        mse_stderr: ((acc[2] / t - mse * mse).max(0.0) / t).sqrt(),
        bias: acc[0] / t,
        centroid_mse: acc[3] / t,
        trials,
    })
}
