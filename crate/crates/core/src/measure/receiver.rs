use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::crosstalk::{apply_crosstalk, Crosstalk};
use super::family::{PairFamily, SceneFamily};
use super::law::{ContinuousLaw, DiscreteLaw, Law, Outcome, OutcomeModel, Statistics};
use crate::optics::{hg_amplitudes, interleaved_pair, BasisKind, ModeBasis, Psf, PsfKind};
use crate::scene::{Emitter, TwoPointScene};
use crate::special::erf;
use crate::{Error, Result};

/// Receiver architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    /// Photon positions in the image plane.
    Direct,
    /// Full mode sorter over a truncated basis plus a bucket.
    Spade,
    /// One target mode plus a bucket for everything else.
    Bspade,
    /// Even/odd parity about the receiver axis.
    Sliver,
    /// Projection onto the sign-flipped PSF; the complement is discarded.
    Splice,
    /// Two-dimensional modes 00, 10, 01 plus a bucket.
    Trispade,
}

impl ReceiverKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::Direct => "direct",
            ReceiverKind::Spade => "spade",
            ReceiverKind::Bspade => "bspade",
            ReceiverKind::Sliver => "sliver",
            ReceiverKind::Splice => "splice",
            ReceiverKind::Trispade => "trispade",
        }
    }
}

/// A measurement apparatus: architecture, sorting basis, axis placement and
/// optional modal crosstalk.
#[derive(Debug, Clone)]
pub struct Receiver {
    kind: ReceiverKind,
    basis: Option<ModeBasis>,
    target: usize,
    axis: (f64, f64),
    rotation: f64,
    crosstalk: Option<Crosstalk>,
}

impl Receiver {
    fn bare(kind: ReceiverKind, basis: Option<ModeBasis>) -> Self {
        Self { kind, basis, target: 1, axis: (0.0, 0.0), rotation: 0.0, crosstalk: None }
    }

    pub fn direct() -> Self {
        Self::bare(ReceiverKind::Direct, None)
    }

    pub fn spade(basis: ModeBasis) -> Self {
        Self::bare(ReceiverKind::Spade, Some(basis))
    }

    /// Binary sorter for mode `target` of `basis`.
    pub fn bspade(basis: ModeBasis, target: usize) -> Result<Self> {
        if target > basis.cutoff() {
            return Err(Error::domain("target mode exceeds basis cutoff"));
        }
        let mut r = Self::bare(ReceiverKind::Bspade, Some(basis));
        r.target = target;
        Ok(r)
    }

    pub fn sliver() -> Self {
        Self::bare(ReceiverKind::Sliver, None)
    }

    pub fn splice() -> Self {
        Self::bare(ReceiverKind::Splice, None)
    }

    pub fn trispade() -> Self {
        Self::bare(ReceiverKind::Trispade, None)
    }

    /// Places the receiver axis at `offset` (relative to the scene frame, so
    /// for a scene centred at the origin this is the alignment offset).
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.axis.0 = offset;
        self
    }

    pub fn with_axis(mut self, x: f64, y: f64) -> Self {
        self.axis = (x, y);
        self
    }

    /// In-plane rotation of the TriSPADE mode frame (radians).
    pub fn with_rotation(mut self, radians: f64) -> Self {
        self.rotation = radians;
        self
    }

    pub fn with_crosstalk(mut self, x: Crosstalk) -> Self {
        self.crosstalk = Some(x);
        self
    }

    pub fn kind(&self) -> ReceiverKind {
        self.kind
    }

    pub fn basis(&self) -> Option<&ModeBasis> {
        self.basis.as_ref()
    }

    pub fn alignment_offset(&self) -> f64 {
        self.axis.0
    }

    /// Outcome law for a set of incoherent emitters.
    pub fn law(&self, psf: &Psf, emitters: &[Emitter]) -> Result<Law> {
        if emitters.is_empty() {
            return Err(Error::domain("scene has no emitters"));
        }
        let law = match self.kind {
            ReceiverKind::Direct => {
                require_1d(emitters)?;
                return Ok(Law::Continuous(ContinuousLaw::new(
                    psf.clone(),
                    emitters.iter().map(|e| (e.weight, e.x)).collect(),
                )?));
            }
            ReceiverKind::Spade => self.spade_law(psf, emitters)?,
            ReceiverKind::Bspade => {
                require_1d(emitters)?;
                let basis = self.basis.as_ref().expect("bspade has a basis");
                let mut p = 0.0;
                for e in emitters {
                    let a = basis.amplitudes(psf, e.x - self.axis.0)?;
                    p += e.weight * a[self.target] * a[self.target];
                }
                let mut law = DiscreteLaw::new(
                    vec![Outcome::Mode(self.target), Outcome::Bucket],
                    vec![p, 1.0 - p],
                    Statistics::Multinomial,
                )?;
                law.leakage_warning = false;
                law
            }
            ReceiverKind::Sliver => {
                require_1d(emitters)?;
                let p_odd: f64 = emitters
                    .iter()
                    .map(|e| e.weight * 0.5 * (1.0 - psf.reflected_overlap(e.x - self.axis.0)))
                    .sum();
                DiscreteLaw::new(vec![Outcome::Even, Outcome::Odd], vec![1.0 - p_odd, p_odd], Statistics::Multinomial)?
            }
            ReceiverKind::Splice => {
                require_1d(emitters)?;
                if psf.kind() != PsfKind::Gaussian {
                    return Err(Error::unsupported("the SPLICE projection mode is defined for Gaussian PSFs only"));
                }
                let dk = psf.delta_k();
                let q: f64 = emitters
                    .iter()
                    .map(|e| {
                        let u = (e.x - self.axis.0) * dk;
                        let amp = (-0.5 * u * u).exp() * erf(u / SQRT_2);
                        e.weight * amp * amp
                    })
                    .sum();
                DiscreteLaw::new(vec![Outcome::Click, Outcome::Discard], vec![q, 1.0 - q], Statistics::Multinomial)?
            }
            ReceiverKind::Trispade => {
                if psf.kind() != PsfKind::Gaussian {
                    return Err(Error::unsupported("TriSPADE is modelled for separable Gaussian PSFs only"));
                }
                let dk = psf.delta_k();
                let (c, s) = (self.rotation.cos(), self.rotation.sin());
                let mut p = [0.0; 3];
                for e in emitters {
                    let (dx, dy) = (e.x - self.axis.0, e.y - self.axis.1);
                    let qx = ((c * dx + s * dy) * dk).powi(2);
                    let qy = ((-s * dx + c * dy) * dk).powi(2);
                    let base = (-(qx + qy)).exp();
                    p[0] += e.weight * base;
                    p[1] += e.weight * base * qx;
                    p[2] += e.weight * base * qy;
                }
                let bucket = 1.0 - p.iter().sum::<f64>();
                DiscreteLaw::new(
                    vec![Outcome::Mode2(0, 0), Outcome::Mode2(1, 0), Outcome::Mode2(0, 1), Outcome::Bucket],
                    vec![p[0], p[1], p[2], bucket],
                    Statistics::Multinomial,
                )?
            }
        };
        let law = match &self.crosstalk {
            Some(x) => apply_crosstalk(&law, x)?,
            None => law,
        };
        Ok(Law::Discrete(law))
    }

    fn spade_law(&self, psf: &Psf, emitters: &[Emitter]) -> Result<DiscreteLaw> {
        let basis = self.basis.as_ref().expect("spade has a basis");
        basis.check_matches(psf)?;
        let m = basis.cutoff();
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        if basis.dims() == 1 {
            require_1d(emitters)?;
            let mut p = vec![0.0; m + 1];
            for e in emitters {
                let a = basis.amplitudes(psf, e.x - self.axis.0)?;
                for (pn, an) in p.iter_mut().zip(&a) {
                    *pn += e.weight * an * an;
                }
            }
            if basis.kind() == BasisKind::Parity {
                let even: f64 = p.iter().step_by(2).sum();
                let odd: f64 = p.iter().skip(1).step_by(2).sum();
                outcomes.extend([Outcome::Even, Outcome::Odd]);
                probs.extend([even, odd]);
            } else {
                for (n, pn) in p.into_iter().enumerate() {
                    outcomes.push(label_1d(basis, n));
                    probs.push(pn);
                }
            }
        } else {
            // Product basis along x with matched HG along y, total order <= M.
            let dk = psf.delta_k();
            let mut p = vec![vec![0.0; m + 1]; m + 1];
            for e in emitters {
                let a = basis.amplitudes(psf, e.x - self.axis.0)?;
                let b = hg_amplitudes(m, (e.y - self.axis.1) * dk);
                for (i, row) in p.iter_mut().enumerate().take(m + 1) {
                    for (j, v) in row.iter_mut().enumerate().take(m + 1 - i) {
                        *v += e.weight * (a[i] * b[j]).powi(2);
                    }
                }
            }
            for (i, row) in p.iter().enumerate() {
                for (j, &v) in row.iter().enumerate().take(m + 1 - i) {
                    outcomes.push(label_2d(basis, i, j));
                    probs.push(v);
                }
            }
        }
        let captured: f64 = probs.iter().sum();
        let bucket = (1.0 - captured).max(0.0);
        outcomes.push(Outcome::Bucket);
        probs.push(bucket);
        let mut law = DiscreteLaw::new(outcomes, probs, Statistics::Multinomial)?;
        law.leakage_warning = bucket > 1e-3;
        Ok(law)
    }
}

fn label_1d(basis: &ModeBasis, n: usize) -> Outcome {
    label_2d(basis, n, usize::MAX)
}

fn label_2d(basis: &ModeBasis, i: usize, j: usize) -> Outcome {
    let two_d = j != usize::MAX;
    let jy = if two_d { j } else { 0 };
    if basis.kind() == BasisKind::InterleavedHg {
        if let Some((lo, plus)) = interleaved_pair(basis.interleave(), i) {
            return Outcome::Pair { lo, plus, n: jy };
        }
    }
    if two_d {
        Outcome::Mode2(i, j)
    } else {
        Outcome::Mode(i)
    }
}

fn require_1d(emitters: &[Emitter]) -> Result<()> {
    if emitters.iter().any(|e| e.y != 0.0) {
        return Err(Error::unsupported("this receiver is modelled in one transverse dimension"));
    }
    Ok(())
}

/// A receiver observing a parametric incoherent scene.
pub struct ReceiverModel<F> {
    pub receiver: Receiver,
    pub psf: Psf,
    pub family: F,
}

impl<F: SceneFamily> ReceiverModel<F> {
    pub fn new(receiver: Receiver, psf: Psf, family: F) -> Self {
        Self { receiver, psf, family }
    }
}

impl<F: SceneFamily> OutcomeModel for ReceiverModel<F> {
    fn param_names(&self) -> Vec<String> {
        self.family.param_names()
    }

    fn law(&self, params: &[f64]) -> Result<Law> {
        let em = self.family.emitters(params)?;
        self.receiver.law(&self.psf, &em)
    }

    fn label(&self) -> String {
        self.receiver.kind.name().to_string()
    }
}

/// Direct-imaging position density of a two-point scene, parametrized by
/// separation.
pub fn direct_pdf(scene: &TwoPointScene, psf: &Psf) -> ReceiverModel<PairFamily> {
    ReceiverModel::new(Receiver::direct(), psf.clone(), PairFamily::separation(*scene))
}

/// Mode-sorting law of a two-point scene, parametrized by separation.
pub fn spade_pmf(scene: &TwoPointScene, psf: &Psf, basis: &ModeBasis) -> Result<ReceiverModel<PairFamily>> {
    basis.check_matches(psf)?;
    Ok(ReceiverModel::new(Receiver::spade(basis.clone()), psf.clone(), PairFamily::separation(*scene)))
}

/// Parity-sorting law of a two-point scene, parametrized by separation.
pub fn sliver_pmf(scene: &TwoPointScene, psf: &Psf) -> ReceiverModel<PairFamily> {
    ReceiverModel::new(Receiver::sliver(), psf.clone(), PairFamily::separation(*scene))
}

/// Single antisymmetric projection of a two-point scene (Gaussian PSF only).
pub fn splice_pmf(scene: &TwoPointScene, psf: &Psf) -> Result<ReceiverModel<PairFamily>> {
    if psf.kind() != PsfKind::Gaussian {
        return Err(Error::unsupported("the SPLICE projection mode is defined for Gaussian PSFs only"));
    }
    Ok(ReceiverModel::new(Receiver::splice(), psf.clone(), PairFamily::separation(*scene)))
}
