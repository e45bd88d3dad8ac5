//! Shared command-line options and the objects built from them.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use subrayleigh::measure::{Budget, Crosstalk, Receiver};
use subrayleigh::optics::{ModeBasis, Psf, PsfKind};
use subrayleigh::scene::{Scene, TwoPointScene};

use crate::table::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsfArg {
    Gaussian,
    Sinc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverArg {
    Direct,
    Spade,
    Bspade,
    Sliver,
    Splice,
    Trispade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetArg {
    Fixed,
    Poisson,
}

/// Options common to every command; each command reads the ones it needs.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Opts {
    /// Point-spread function shape.
    #[arg(long, value_enum, default_value_t = PsfArg::Gaussian)]
    pub psf: PsfArg,
    /// Gaussian PSF width (intensity standard deviation).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Pupil half-width W of the sinc PSF.
    #[arg(long = "k-halfwidth", default_value_t = 3f64.sqrt(), allow_negative_numbers = true)]
    pub k_halfwidth: f64,
    /// TOML scene file.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReceiverArg::Spade)]
    pub receiver: ReceiverArg,
    /// Highest resolved mode index of mode sorters.
    #[arg(long = "basis-cutoff", default_value_t = 20)]
    pub basis_cutoff: usize,
    /// Receiver axis position.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset: f64,
    /// Whitespace-separated row-stochastic crosstalk matrix.
    #[arg(long = "crosstalk-file")]
    pub crosstalk_file: Option<PathBuf>,
    /// Mutual coherence values (real parts), comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    /// Explicit separations, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Separation grid `start:stop:count`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Log-spaced grid.
    #[arg(long)]
    pub log: bool,
    /// Photon numbers, comma-separated.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = BudgetArg::Fixed)]
    pub budget: BudgetArg,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fractions of the budget spent on direct imaging, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub split: Vec<f64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Parses `start:stop:count`, linear or logarithmic.
pub fn parse_grid(spec: &str, log: bool) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Config(format!("grid must be 'start:stop:count', got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if log {
        if !(a > 0.0 && b > 0.0) {
            return Err(CliError::Config("log grids need positive end points".into()));
        }
        let (la, lb) = (a.ln(), b.ln());
        Ok((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect())
    } else {
        Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
    }
}

impl Opts {
    pub fn psf(&self) -> Result<Psf, CliError> {
        Ok(match self.psf {
            PsfArg::Gaussian => Psf::gaussian(self.sigma)?,
            PsfArg::Sinc => Psf::sinc(self.k_halfwidth)?,
        })
    }

    /// Explicit `--theta` values, else `--grid`, else `default` (a grid spec).
    pub fn thetas(&self, default: &str, default_log: bool) -> Result<Vec<f64>, CliError> {
        let v = if !self.theta.is_empty() {
            self.theta.clone()
        } else if let Some(g) = &self.grid {
            parse_grid(g, self.log)?
        } else {
            parse_grid(default, default_log)?
        };
        if v.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(CliError::Config("separations must be finite and non-negative".into()));
        }
        Ok(v)
    }

    pub fn photons(&self, default: &[u64]) -> Result<Vec<u64>, CliError> {
        let v = if self.n.is_empty() { default.to_vec() } else { self.n.clone() };
        if v.contains(&0) {
            return Err(CliError::Config("photon numbers must be positive".into()));
        }
        Ok(v)
    }

    pub fn trials(&self, default: u64) -> Result<u64, CliError> {
        match self.trials.unwrap_or(default) {
            0 => Err(CliError::Config("trials must be positive".into())),
            t => Ok(t),
        }
    }

    pub fn budget(&self) -> Budget {
        match self.budget {
            BudgetArg::Fixed => Budget::FixedN,
            BudgetArg::Poisson => Budget::PoissonN,
        }
    }

    pub fn scene(&self) -> Result<Option<Scene>, CliError> {
        self.scene.as_ref().map(Scene::load).transpose().map_err(CliError::from)
    }

    /// Two-point scene from `--scene`, or an equal pair centred at 0.
    pub fn pair(&self) -> Result<TwoPointScene, CliError> {
        match self.scene()? {
            None => Ok(TwoPointScene::equal(0.0)?),
            Some(Scene::TwoPoint(s)) => Ok(s),
            Some(_) => Err(CliError::Config("this command needs a two-point scene".into())),
        }
    }

    /// Sorter basis matched to the PSF.
    pub fn basis(&self, psf: &Psf) -> Result<ModeBasis, CliError> {
        Ok(match psf.kind() {
            PsfKind::Gaussian => ModeBasis::hermite_gaussian(psf.width_param(), self.basis_cutoff)?,
            _ => ModeBasis::psf_adapted(psf, self.basis_cutoff)?,
        })
    }

    pub fn crosstalk(&self) -> Result<Option<Crosstalk>, CliError> {
        match &self.crosstalk_file {
            None => Ok(None),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Ok(Some(Crosstalk::parse(&text)?))
            }
        }
    }

    /// Receiver of the given kind; crosstalk applies only to `--receiver`.
    pub fn receiver_of(&self, kind: ReceiverArg, psf: &Psf) -> Result<Receiver, CliError> {
        let r = match kind {
            ReceiverArg::Direct => Receiver::direct(),
            ReceiverArg::Spade => Receiver::spade(self.basis(psf)?),
            ReceiverArg::Bspade => Receiver::bspade(self.basis(psf)?, 1)?,
            ReceiverArg::Sliver => Receiver::sliver(),
            ReceiverArg::Splice => Receiver::splice(),
            ReceiverArg::Trispade => Receiver::trispade(),
        };
        let r = r.with_offset(self.offset);
        if kind != self.receiver {
            return Ok(r);
        }
        Ok(match self.crosstalk()? {
            Some(_) if kind == ReceiverArg::Direct => {
                return Err(CliError::Config("crosstalk does not apply to direct imaging".into()))
            }
            Some(x) => r.with_crosstalk(x),
            None => r,
        })
    }

    pub fn receiver(&self, psf: &Psf) -> Result<Receiver, CliError> {
        self.receiver_of(self.receiver, psf)
    }

    /// Bytes of every input file, for the configuration hash.
    pub fn input_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in [&self.scene, &self.crosstalk_file].into_iter().flatten() {
            if let Ok(b) = std::fs::read(p) {
                out.extend(b);
            }
        }
        out
    }
}
