//! One function per subcommand, each producing a [`Table`].

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use subrayleigh::estimate::{
    adaptive_mse, monte_carlo_mse, spade_mle_mse_exact, AdaptiveConfig, EstimatorKind, EstimatorSpec,
};
use subrayleigh::hypothesis::{chernoff_exponent, qce_pure, simulate_discrimination, HypothesisPair, SamplingMethod};
use subrayleigh::information::{crb, default_step, fisher_scalar, qfi_from_fidelity, qfi_partial_coherence_bound, QuantumStateModel};
use subrayleigh::measure::{
    direct_pdf, sample_record, CoherentPairModel, FnModel, Outcome, OutcomeModel, PairFamily, ReceiverModel,
};
use subrayleigh::moments::{estimate_moments, reconstruct, MomentSet, ReconstructOptions};
use subrayleigh::optics::{Interleave, ModeBasis, Psf, PsfKind};
use subrayleigh::rng::derive_seed;
use subrayleigh::scene::{mixture_components, CoherentPairScene, Emitter, Scene, TwoPointScene};
use subrayleigh::Error;

use crate::opts::{Opts, ReceiverArg};
use crate::table::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Plain,
    Importance,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiscriminateArgs {
    /// Error-event generation.
    #[arg(long, value_enum, default_value_t = MethodArg::Importance)]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentsArgs {
    /// Also run the two interleaved sorters to estimate odd cross-moments.
    #[arg(long)]
    pub interleaved: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReconstructArgs {
    /// Moment table written by the `moments` command.
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long, default_value_t = 41)]
    pub width: usize,
    #[arg(long, default_value_t = 1)]
    pub height: usize,
    /// Pixel pitch of the support grid.
    #[arg(long, default_value_t = 0.02)]
    pub pitch: f64,
    /// Smoothness weight.
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Pick the smoothness weight so the whitened misfit is one per
    /// constraint (estimated moments only); overrides `--lambda`.
    #[arg(long = "auto-lambda")]
    pub auto_lambda: bool,
    /// Highest moment order `m + n` used.
    #[arg(long = "max-order", default_value_t = 8)]
    pub max_order: usize,
    /// Also write the image as an 8-bit graymap.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

fn nan_if_unsupported(r: Result<f64, Error>) -> Result<f64, CliError> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Unsupported(_)) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn pair_model(opts: &Opts, kind: ReceiverArg, psf: &Psf, pair: TwoPointScene) -> Result<ReceiverModel<PairFamily>, CliError> {
    Ok(ReceiverModel::new(opts.receiver_of(kind, psf)?, psf.clone(), PairFamily::separation(pair)))
}

fn with_separation(pair: TwoPointScene, theta: f64) -> Result<TwoPointScene, CliError> {
    Ok(TwoPointScene::new(pair.centroid, theta, pair.brightness)?)
}

/// Classical and quantum Cramér-Rao bounds on the separation.
pub fn bounds(opts: &Opts) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let pair = opts.pair()?;
    let thetas = opts.thetas("0.01:3:200", true)?;
    let n = opts.photons(&[1])?[0] as f64;
    let step = default_step(&psf);
    let direct = direct_pdf(&pair, &psf);
    let receiver = pair_model(opts, opts.receiver, &psf, pair)?;
    let quantum = QuantumStateModel::mixture(psf.clone(), PairFamily::separation(pair));

    let mut t = Table::new(&["theta", "fi_direct", "fi_receiver", "qfi", "crb_direct", "crb_receiver", "qcrb"]);
    t.note("N", n);
    t.note("receiver", receiver.label());
    t.note("fi", "central-difference Fisher information per detected photon");
    t.note("qfi", "fidelity curvature of the mixed state");
    for &theta in &thetas {
        let fd = fisher_scalar(&direct, theta, step)?.value;
        let fr = fisher_scalar(&receiver, theta, step)?.value;
        let q = qfi_from_fidelity(&quantum, theta, step)?;
        t.push(vec![
            theta.into(),
            fd.into(),
            fr.into(),
            q.into(),
            crb(fd, n).into(),
            crb(fr, n).into(),
            crb(q, n).into(),
        ]);
    }
    Ok(t)
}

/// Chernoff exponents for one point against two, per receiver and quantum.
pub fn chernoff(opts: &Opts) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let pair = opts.pair()?;
    let thetas = opts.thetas("0.05:1:20", false)?;
    let mut t = Table::new(&["theta", "xi_direct", "xi_spade", "xi_sliver", "xi_splice", "xi_quantum"]);
    t.note("h1", format!("single source at {}", pair.centroid));
    t.note("h2", format!("pair about {} with brightness {}", pair.centroid, pair.brightness));
    let h1 = vec![Emitter::new(1.0, pair.centroid)];
    for &theta in &thetas {
        let h2 = mixture_components(&with_separation(pair, theta)?);
        let mut row: Vec<Cell> = vec![theta.into()];
        for kind in [ReceiverArg::Direct, ReceiverArg::Spade, ReceiverArg::Sliver, ReceiverArg::Splice] {
            let r = opts.receiver_of(kind, &psf)?;
            let xi = r
                .law(&psf, &h1)
                .and_then(|l1| r.law(&psf, &h2).and_then(|l2| chernoff_exponent(&l1, &l2)))
                .map(|e| e.xi);
            row.push(nan_if_unsupported(xi)?.into());
        }
        row.push(qce_pure(&psf, &h1, &h2)?.xi.into());
        t.push(row);
    }
    Ok(t)
}

/// Simulated error probability of the likelihood-ratio test.
pub fn discriminate(opts: &Opts, args: &DiscriminateArgs) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let pair = opts.pair()?;
    let thetas = opts.thetas("0.2:0.2:1", false)?;
    let photons = opts.photons(&[250, 500, 1000, 2000])?;
    let trials = opts.trials(10_000)?;
    let method = match args.method {
        MethodArg::Plain => SamplingMethod::Plain,
        MethodArg::Importance => SamplingMethod::Importance,
    };
    let receiver = opts.receiver(&psf)?;
    let h1 = vec![Emitter::new(1.0, pair.centroid)];
    let mut t = Table::new(&[
        "theta",
        "N",
        "p_error",
        "stderr",
        "error_events",
        "fitted_exponent",
        "fitted_stderr",
        "exponent_lower_bound",
        "chernoff_xi",
    ]);
    t.note("receiver", receiver.kind().name());
    t.note("method", format!("{:?}", method).to_lowercase());
    t.note("trials", trials);
    for (i, &theta) in thetas.iter().enumerate() {
        let h2 = mixture_components(&with_separation(pair, theta)?);
        let hp = HypothesisPair::symmetric(receiver.law(&psf, &h1)?, receiver.law(&psf, &h2)?);
        let rep = simulate_discrimination(&hp, &photons, trials, derive_seed(opts.seed, i as u64), method)?;
        for p in &rep.points {
            t.push(vec![
                theta.into(),
                p.photons.into(),
                p.p_error.into(),
                p.stderr.into(),
                p.error_events.into(),
                rep.fitted_exponent.unwrap_or(f64::NAN).into(),
                rep.fitted_stderr.unwrap_or(f64::NAN).into(),
                rep.exponent_lower_bound.unwrap_or(f64::NAN).into(),
                rep.chernoff.xi.into(),
            ]);
        }
    }
    Ok(t)
}

/// Fisher information of a partially coherent pair under mode sorting.
pub fn coherence(opts: &Opts) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let basis = opts.basis(&psf)?;
    let thetas = opts.thetas("0.01:1:50", false)?;
    let gammas = if opts.gamma.is_empty() { vec![-1.0, -0.5, 0.0, 0.5, 1.0] } else { opts.gamma.clone() };
    let step = default_step(&psf);
    let mut t = Table::new(&["theta", "gamma", "fi_spade", "fi_derivative", "qfi_bound", "kappa"]);
    t.note("normalization", "per emitted photon");
    t.note("fi_derivative", "first-derivative mode alone");
    for &g in &gammas {
        let gamma = Complex64::new(g, 0.0);
        let scene = CoherentPairScene::new(0.0, 1.0, gamma)?;
        let model = CoherentPairModel::new(scene, psf.clone(), basis.clone())?.with_offset(opts.offset);
        let m2 = model.clone();
        let derivative = FnModel::new("mode-1", &["theta"], move |p: &[f64]| {
            Ok(subrayleigh::measure::Law::Discrete(m2.intensities(p[0])?.select(&[Outcome::Mode(1)])?))
        });
        for &theta in &thetas {
            t.push(vec![
                theta.into(),
                g.into(),
                fisher_scalar(&model, theta, step)?.value.into(),
                fisher_scalar(&derivative, theta, step)?.value.into(),
                qfi_partial_coherence_bound(gamma, theta, &psf, 1.0)?.into(),
                psf.kappa(theta)?.into(),
            ]);
        }
    }
    Ok(t)
}

/// Monte Carlo MSE of the separation estimator matched to the receiver.
pub fn mse_sim(opts: &Opts) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let pair = opts.pair()?;
    let dk = psf.delta_k();
    let thetas = opts.thetas("0:2:21", false)?;
    let photons = opts.photons(&[100])?;
    let trials = opts.trials(10_000)?;
    let step = default_step(&psf);

    let (model, kind): (Box<dyn OutcomeModel>, EstimatorKind) = match opts.receiver {
        ReceiverArg::Direct => (Box::new(direct_pdf(&pair, &psf)), EstimatorKind::DirectMleNumeric),
        ReceiverArg::Spade
            if psf.kind() == PsfKind::Gaussian
                && opts.offset == pair.centroid
                && pair.brightness == 0.5
                && opts.crosstalk_file.is_none() =>
        {
            (Box::new(pair_model(opts, opts.receiver, &psf, pair)?), EstimatorKind::SpadeClosedForm)
        }
        k => (Box::new(pair_model(opts, k, &psf, pair)?), EstimatorKind::GenericMleNumeric),
    };
    let closed = kind == EstimatorKind::SpadeClosedForm;
    let spec = EstimatorSpec::new(kind, dk);

    let mut t = Table::new(&[
        "theta", "mse", "bias", "variance", "mse_stderr", "crb", "exact_mse", "trials", "N", "receiver", "seed",
    ]);
    t.note("estimator", serde_json::to_string(&kind).unwrap_or_default().trim_matches('"'));
    for (i, &n) in photons.iter().enumerate() {
        let seed = if photons.len() == 1 { opts.seed } else { derive_seed(opts.seed, i as u64) };
        let mc = monte_carlo_mse(model.as_ref(), &spec, &thetas, n, trials, seed)?;
        for (j, &theta) in mc.theta.iter().enumerate() {
            let fi = fisher_scalar(model.as_ref(), theta, step)?.value;
            let exact = if closed { spade_mle_mse_exact(theta, n, dk)?.mse } else { f64::NAN };
            t.push(vec![
                theta.into(),
                mc.mse[j].into(),
                mc.bias[j].into(),
                mc.variance[j].into(),
                mc.mse_stderr[j].into(),
                crb(fi, n as f64).into(),
                exact.into(),
                mc.trials.into(),
                n.into(),
                mc.receiver.clone().into(),
                mc.seed.into(),
            ]);
        }
    }
    Ok(t)
}

/// Two-stage adaptive protocol against the aligned sorter and direct imaging.
pub fn adaptive(opts: &Opts) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    let pair = opts.pair()?;
    let default_theta = if opts.scene.is_some() { pair.separation } else { 0.2 };
    let thetas = if opts.theta.is_empty() && opts.grid.is_none() { vec![default_theta] } else { opts.thetas("", false)? };
    let photons = opts.photons(&[10_000])?[0];
    let trials = opts.trials(1000)?;
    let splits = if opts.split.is_empty() { vec![0.5] } else { opts.split.clone() };
    let step = default_step(&psf);

    let mut t = Table::new(&[
        "theta", "split", "mse", "mse_stderr", "bias", "centroid_mse", "aligned_mse", "crb_direct", "trials", "N",
    ]);
    t.note("centroid", pair.centroid);
    for (i, &theta) in thetas.iter().enumerate() {
        let scene = with_separation(pair, theta)?;
        let seed = derive_seed(opts.seed, i as u64);
        let base = AdaptiveConfig { cutoff: opts.basis_cutoff, ..AdaptiveConfig::new(photons) };
        let aligned = adaptive_mse(&scene, &psf, &base.with_known_centroid(pair.centroid), trials, seed)?;
        let fd = fisher_scalar(&direct_pdf(&scene, &psf), theta, step)?.value;
        for &f in &splits {
            let r = adaptive_mse(&scene, &psf, &base.with_split(f), trials, seed)?;
            t.push(vec![
                theta.into(),
                f.into(),
                r.mse.into(),
                r.mse_stderr.into(),
                r.bias.into(),
                r.centroid_mse.into(),
                aligned.mse.into(),
                crb(fd, photons as f64).into(),
                r.trials.into(),
                photons.into(),
            ]);
        }
    }
    Ok(t)
}

/// Simulated HG moment estimates of a scene.
pub fn moments(opts: &Opts, args: &MomentsArgs) -> Result<Table, CliError> {
    let psf = opts.psf()?;
    if psf.kind() != PsfKind::Gaussian {
        return Err(Error::Unsupported("moment estimation uses the Hermite-Gaussian sorter".into()).into());
    }
    let emitters = match opts.scene()? {
        Some(Scene::Grid(g)) => mixture_components(&g),
        Some(Scene::Constellation(c)) => mixture_components(&c),
        Some(Scene::TwoPoint(p)) => mixture_components(&p),
        Some(Scene::CoherentPair(_)) => {
            return Err(CliError::Config("moment estimation needs an incoherent scene".into()))
        }
        None => return Err(CliError::Config("moments needs --scene".into())),
    };
    let two_d = emitters.iter().any(|e| e.y != 0.0);
    let n = opts.photons(&[1_000_000])?[0];
    let sigma = psf.width_param();
    let cutoff = opts.basis_cutoff;

    let record_for = |basis: ModeBasis, label: &str, seed: u64| {
        let basis = if two_d { basis.two_dimensional() } else { basis };
        let (p, em) = (psf.clone(), emitters.clone());
        let model = FnModel::new(label, &[], move |_: &[f64]| {
            subrayleigh::measure::Receiver::spade(basis.clone()).law(&p, &em)
        });
        sample_record(&model, &[], n, opts.budget(), seed)
    };
    let main = record_for(ModeBasis::hermite_gaussian(sigma, cutoff)?, "spade", opts.seed)?;
    let mut extra = Vec::new();
    if args.interleaved {
        for (i, pattern) in [Interleave::Paired, Interleave::Shifted].into_iter().enumerate() {
            let b = ModeBasis::interleaved(sigma, cutoff, pattern)?;
            extra.push(record_for(b, "spade-interleaved", derive_seed(opts.seed, i as u64 + 1))?);
        }
    }
    let set = estimate_moments(&main, &extra)?;

    let mut t = Table::new(&["kind", "m", "n", "value", "stderr"]);
    t.note("photons", set.photons);
    t.note("coverage", format!("{:?}", set.coverage).to_lowercase());
    for (kind, list) in [("even", &set.even), ("odd", &set.odd)] {
        for e in list {
            t.push(vec![kind.into(), (e.m as u64).into(), (e.n as u64).into(), e.value.into(), e.stderr.into()]);
        }
    }
    Ok(t)
}

/// Non-negative image consistent with a moment table.
pub fn reconstruct_cmd(opts: &Opts, args: &ReconstructArgs) -> Result<(Table, Option<Vec<u8>>), CliError> {
    let psf = opts.psf()?;
    let text = std::fs::read_to_string(&args.moments)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.moments.display())))?;
    let set = MomentSet::from_csv(&text)?;
    if args.width == 0 || args.height == 0 || args.pitch.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(CliError::Config("grid dimensions and pitch must be positive".into()));
    }
    let mut o = ReconstructOptions::new(args.width, args.height, args.pitch)
        .with_lambda(args.lambda)
        .with_max_order(args.max_order);
    if args.auto_lambda {
        o = o.with_auto_lambda();
    }
    let r = reconstruct(&set, psf.delta_k(), &o)?;
    let mut t = Table::new(&["x", "y", "intensity"]);
    t.note("relative_residual", subrayleigh::information::fmt_num(r.relative_residual));
    t.note("infeasible", r.infeasible);
    if let Some(c) = r.chi2_per_constraint {
        t.note("chi2_per_constraint", subrayleigh::information::fmt_num(c));
    }
    t.note("lambda", r.lambda);
    t.note("constraints", r.constraints);
    for j in 0..r.grid.height() {
        for i in 0..r.grid.width() {
            let (x, y) = r.grid.coords(i, j);
            t.push(vec![x.into(), y.into(), r.grid.get(i, j).into()]);
        }
    }
    let pgm = args.pgm.as_ref().map(|_| r.grid.to_pgm());
    Ok((t, pgm))
}
