use rand::Rng;
use serde::Serialize;

use super::chernoff::{aligned, chernoff_exponent, ExponentReport};
use crate::fit::fit_line;
use crate::measure::{multinomial, ContinuousLaw, Law, Statistics};
use crate::rng::{derive_seed, par_indexed, stream};
use crate::{Error, Result};

/// Two outcome laws of one receiver under competing hypotheses.
#[derive(Debug, Clone)]
pub struct HypothesisPair {
    pub h1: Law,
    pub h2: Law,
    /// Prior probability of `h1`.
    pub prior1: f64,
}

impl HypothesisPair {
    pub fn new(h1: Law, h2: Law, prior1: f64) -> Result<Self> {
        if !(prior1 > 0.0 && prior1 < 1.0) {
            return Err(Error::domain("priors must be positive and sum to one"));
        }
        Ok(Self { h1, h2, prior1 })
    }

    /// Equal priors.
    pub fn symmetric(h1: Law, h2: Law) -> Self {
        Self { h1, h2, prior1: 0.5 }
    }
}

/// How error events are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMethod {
    /// Photons drawn from each hypothesis in turn; half the trials each.
    Plain,
    /// Photons drawn from the Chernoff-tilted law `∝ p1^s p2^{1−s}` and
    /// reweighted, which resolves error rates far below `1/trials`.
    #[default]
    Importance,
}

/// Error rate at one photon number.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorPoint {
    pub photons: u64,
    pub p_error: f64,
    pub stderr: f64,
    /// Trials whose decision was wrong (plain) or that carried nonzero
    /// error weight (importance sampling).
    pub error_events: u64,
}

/// Outcome of a discrimination experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DiscriminationReport {
    pub method: SamplingMethod,
    pub trials: u64,
    pub seed: u64,
    pub points: Vec<ErrorPoint>,
    /// Slope of `−ln P_e` against `N`.
    pub fitted_exponent: Option<f64>,
    pub fitted_stderr: Option<f64>,
    /// Set instead of a fit when no errors were seen at the largest `N`.
    pub exponent_lower_bound: Option<f64>,
    pub chernoff: ExponentReport,
}

impl DiscriminationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("photons,p_error,stderr,error_events\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.8e},{:.8e},{}\n", p.photons, p.p_error, p.stderr, p.error_events));
        }
        s
    }
}

/// Per-photon log-likelihoods and proposal log-density.
enum Proposal {
    Discrete { q: Vec<f64>, ln1: Vec<f64>, ln2: Vec<f64>, lnq: Vec<f64> },
    Continuous { l1: ContinuousLaw, l2: ContinuousLaw, edges: Vec<f64>, cdf: Vec<f64>, dens: Vec<f64> },
}

fn ln0(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl Proposal {
    fn discrete(q: Vec<f64>, p1: &[f64], p2: &[f64]) -> Self {
        let z: f64 = q.iter().sum();
        let q: Vec<f64> = q.iter().map(|v| v / z).collect();
        Proposal::Discrete {
            lnq: q.iter().map(|v| ln0(*v)).collect(),
            q,
            ln1: p1.iter().map(|v| ln0(*v)).collect(),
            ln2: p2.iter().map(|v| ln0(*v)).collect(),
        }
    }

    fn continuous(l1: &ContinuousLaw, l2: &ContinuousLaw, f: impl Fn(f64, f64) -> f64) -> Self {
        let pts = ContinuousLaw::joint_breakpoints(&[l1, l2]);
        let width = l1.psf().sigma_equivalent() / 25.0;
        let mut edges = vec![pts[0]];
        for w in pts.windows(2) {
            let m = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            for k in 1..=m {
                edges.push(w[0] + (w[1] - w[0]) * k as f64 / m as f64);
            }
        }
        let mut mass = Vec::with_capacity(edges.len() - 1);
        for e in edges.windows(2) {
            let g = |x: f64| f(l1.density(x), l2.density(x));
            let mid = 0.5 * (e[0] + e[1]);
            mass.push((e[1] - e[0]) * (g(e[0]) + 4.0 * g(mid) + g(e[1])) / 6.0);
        }
        let total: f64 = mass.iter().sum();
        let mut cdf = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for m in &mass {
            acc += m / total;
            cdf.push(acc);
        }
        let dens = mass.iter().zip(edges.windows(2)).map(|(m, e)| m / total / (e[1] - e[0])).collect();
        Proposal::Continuous { l1: l1.clone(), l2: l2.clone(), edges, cdf, dens }
    }

    /// Returns `(ln L1, ln L2, ln Q)` for `n` photons drawn from the proposal.
    fn draw<R: Rng>(&self, rng: &mut R, n: u64) -> (f64, f64, f64) {
        match self {
            Proposal::Discrete { q, ln1, ln2, lnq } => {
                let c = multinomial(rng, n, q);
                let mut out = (0.0, 0.0, 0.0);
                for (i, &k) in c.iter().enumerate() {
                    if k > 0 {
                        let k = k as f64;
                        out.0 += k * ln1[i];
                        out.1 += k * ln2[i];
                        out.2 += k * lnq[i];
                    }
                }
                out
            }
            Proposal::Continuous { l1, l2, edges, cdf, dens } => {
                let mut out = (0.0, 0.0, 0.0);
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let b = cdf.partition_point(|c| *c < u).min(dens.len() - 1);
                    let x = edges[b] + rng.random::<f64>() * (edges[b + 1] - edges[b]);
                    out.0 += ln0(l1.density(x));
                    out.1 += ln0(l2.density(x));
                    out.2 += dens[b].ln();
                }
                out
            }
        }
    }
}

fn tilted_proposal(pair: &HypothesisPair, s: f64) -> Result<Proposal> {
    match (&pair.h1, &pair.h2) {
        (Law::Discrete(a), Law::Discrete(b)) => {
            let p2 = aligned(a, b)?;
            let q: Vec<f64> = a
                .probs
                .iter()
                .zip(&p2)
                .map(|(&x, &y)| if x > 0.0 && y > 0.0 { (s * x.ln() + (1.0 - s) * y.ln()).exp() } else { 0.0 })
                .collect();
            Ok(Proposal::discrete(q, &a.probs, &p2))
        }
        (Law::Continuous(a), Law::Continuous(b)) => Ok(Proposal::continuous(a, b, |x, y| {
            if x > 0.0 && y > 0.0 {
                (s * x.ln() + (1.0 - s) * y.ln()).exp()
            } else {
                0.0
            }
        })),
        _ => Err(Error::domain("hypotheses must share a law type")),
    }
}

fn hypothesis_proposal(pair: &HypothesisPair, which: usize) -> Result<Proposal> {
    match (&pair.h1, &pair.h2) {
        (Law::Discrete(a), Law::Discrete(b)) => {
            let p2 = aligned(a, b)?;
            let q = if which == 1 { a.probs.clone() } else { p2.clone() };
            Ok(Proposal::discrete(q, &a.probs, &p2))
        }
        (Law::Continuous(a), Law::Continuous(b)) => {
            Ok(Proposal::continuous(a, b, move |x, y| if which == 1 { x } else { y }))
        }
        _ => Err(Error::domain("hypotheses must share a law type")),
    }
}

const BLOCK: u64 = 2048;

/// Accumulated `(Σ X, Σ X², events)` over a block of trials.
fn run_blocks<F>(trials: u64, seed: u64, f: F) -> (f64, f64, u64)
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> (f64, bool) + Sync + Send,
{
    let blocks = trials.div_ceil(BLOCK);
    let parts = par_indexed(blocks as usize, |b| {
        let mut rng = stream(seed, b as u64);
        let n = BLOCK.min(trials - b as u64 * BLOCK);
        let mut acc = (0.0, 0.0, 0u64);
        for _ in 0..n {
            let (x, ev) = f(&mut rng);
            acc.0 += x;
            acc.1 += x * x;
            acc.2 += ev as u64;
        }
        acc
    });
    parts.into_iter().fold((0.0, 0.0, 0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2))
}

/// Monte Carlo error probability of the likelihood-ratio test (ties go to
/// `h1`) for each photon number in `photons`, with a fitted exponent.
pub fn simulate_discrimination(
    pair: &HypothesisPair,
    photons: &[u64],
    trials: u64,
    seed: u64,
    method: SamplingMethod,
) -> Result<DiscriminationReport> {
    if trials < 2 || photons.is_empty() {
        return Err(Error::domain("need at least two trials and one photon number"));
    }
    if let Law::Discrete(d) = &pair.h1 {
        if d.statistics != Statistics::Multinomial {
            return Err(Error::unsupported("discrimination needs multinomial laws"));
        }
    }
    let chernoff = chernoff_exponent(&pair.h1, &pair.h2)?;
    let (pi1, pi2) = (pair.prior1, 1.0 - pair.prior1);
    let tau = (pi2 / pi1).ln();
    let mut points = Vec::with_capacity(photons.len());
    for (gi, &n) in photons.iter().enumerate() {
        let gseed = derive_seed(seed, gi as u64);
        let point = match method {
            SamplingMethod::Importance => {
                let s = if chernoff.is_infinite() { 0.5 } else { chernoff.s_star };
                let prop = tilted_proposal(pair, s)?;
                let (sx, sxx, ev) = run_blocks(trials, gseed, |rng| {
                    let (l1, l2, lq) = prop.draw(rng, n);
                    if l1 - l2 >= tau {
                        (pi2 * (l2 - lq).exp(), l2 > f64::NEG_INFINITY)
                    } else {
                        (pi1 * (l1 - lq).exp(), l1 > f64::NEG_INFINITY)
                    }
                });
                let t = trials as f64;
                let mean = sx / t;
                let var = ((sxx / t - mean * mean) / (t - 1.0)).max(0.0);
                ErrorPoint { photons: n, p_error: mean, stderr: var.sqrt(), error_events: ev }
            }
            SamplingMethod::Plain => {
                let half = trials / 2;
                let mut total = 0.0;
                let mut var = 0.0;
                let mut events = 0;
                for (h, prior, t) in [(1usize, pi1, half), (2, pi2, trials - half)] {
                    let prop = hypothesis_proposal(pair, h)?;
                    let (_, _, ev) = run_blocks(t, derive_seed(gseed, h as u64), |rng| {
                        let (l1, l2, _) = prop.draw(rng, n);
                        let says_h1 = l1 - l2 >= tau;
                        let wrong = if h == 1 { !says_h1 } else { says_h1 };
                        (0.0, wrong)
                    });
                    let rate = ev as f64 / t as f64;
                    total += prior * rate;
                    var += prior * prior * rate * (1.0 - rate) / t as f64;
                    events += ev;
                }
                ErrorPoint { photons: n, p_error: total, stderr: var.sqrt(), error_events: events }
            }
        };
        points.push(point);
    }
    let last = points.last().expect("non-empty");
    let (mut fitted, mut fitted_se, mut lower) = (None, None, None);
    if last.p_error <= 0.0 {
        let nmax = last.photons as f64;
        lower = Some(-(3.0 / trials as f64).ln() / nmax);
    } else if points.len() >= 2 && points.iter().all(|p| p.p_error > 0.0) {
        let x: Vec<f64> = points.iter().map(|p| p.photons as f64).collect();
        let y: Vec<f64> = points.iter().map(|p| -p.p_error.ln()).collect();
        let sig: Vec<f64> = points.iter().map(|p| (p.stderr / p.p_error).max(1e-12)).collect();
        let fit = fit_line(&x, &y, Some(&sig))?;
        fitted = Some(fit.slope);
        fitted_se = Some(fit.slope_stderr);
    }
    Ok(DiscriminationReport {
        method,
        trials,
        seed,
        points,
        fitted_exponent: fitted,
        fitted_stderr: fitted_se,
        exponent_lower_bound: lower,
        chernoff,
    })
}
