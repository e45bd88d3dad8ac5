use std::cell::Cell;

use serde::Serialize;

use crate::measure::{ContinuousLaw, DiscreteLaw, Law, Statistics};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::tilted_gap;
use crate::{Error, Result};

/// A Chernoff-type exponent and where it was attained.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    /// `ξ ≥ 0`; `+∞` when the supports are disjoint.
    pub xi: f64,
    /// Maximizing tilt `s* ∈ [0, 1]` (weight on the first hypothesis).
    pub s_star: f64,
    pub method: String,
    /// `ξ/(θΔk)^p` style coefficient when the caller fits one.
    pub leading_coefficient: Option<f64>,
}

impl ExponentReport {
    pub fn is_infinite(&self) -> bool {
        self.xi.is_infinite()
    }
}

/// Per-outcome contribution `s·p1 + (1−s)·p2 − p1^s p2^{1−s}` (non-negative).
pub(crate) fn gap_term(s: f64, p1: f64, p2: f64) -> f64 {
    if p1 <= 0.0 && p2 <= 0.0 {
        return 0.0;
    }
    if p2 <= 0.0 {
        return if s >= 1.0 { 0.0 } else { s * p1 };
    }
    if p1 <= 0.0 {
        return if s <= 0.0 { 0.0 } else { (1.0 - s) * p2 };
    }
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let r = (p1 / p2).ln();
    if r.abs() < 1.0 {
        p2 * tilted_gap(s, r)
    } else {
        (s * p1 + (1.0 - s) * p2 - (s * p1.ln() + (1.0 - s) * p2.ln()).exp()).max(0.0)
    }
}

/// Summed gap `G(s)` and whether the supports overlap.
fn discrete_gap(s: f64, a: &DiscreteLaw, b: &[f64]) -> (f64, bool) {
    let mut g = 0.0;
    let mut overlap = false;
    for (&p1, &p2) in a.probs.iter().zip(b) {
        g += gap_term(s, p1, p2);
        overlap |= p1 > 0.0 && p2 > 0.0;
    }
    (g, overlap)
}

/// Probabilities of `b` reordered to the outcome labels of `a`.
pub(crate) fn aligned(a: &DiscreteLaw, b: &DiscreteLaw) -> Result<Vec<f64>> {
    if a.statistics != b.statistics {
        return Err(Error::domain("laws use different counting statistics"));
    }
    if a.outcomes == b.outcomes {
        return Ok(b.probs.clone());
    }
    let mut out = Vec::with_capacity(a.len());
    for o in &a.outcomes {
        out.push(b.prob(*o).unwrap_or(0.0));
    }
    let covered: f64 = out.iter().sum();
    if (covered - b.total()).abs() > 1e-12 {
        return Err(Error::domain("the second law has outcomes the first lacks"));
    }
    Ok(out)
}

fn continuous_gap(s: f64, a: &ContinuousLaw, b: &ContinuousLaw) -> Result<f64> {
    let pts = ContinuousLaw::joint_breakpoints(&[a, b]);
    let opts = QuadOptions { abs_tol: 1e-22, rel_tol: 1e-10, ..QuadOptions::default() };
    Ok(integrate_with_breaks(|x| gap_term(s, a.density(x), b.density(x)), &pts, opts)?.value.max(0.0))
}

/// Exponent at fixed `s`: `−ln(1 − G)` for normalized laws, `G` per photon
/// for Poisson-intensity laws. `None` when the supports are disjoint.
fn exponent_at(s: f64, l1: &Law, l2: &Law) -> Result<Option<f64>> {
    match (l1, l2) {
        (Law::Discrete(a), Law::Discrete(b)) => {
            let bp = aligned(a, b)?;
            let (g, overlap) = discrete_gap(s, a, &bp);
            if !overlap {
                return Ok(None);
            }
            Ok(Some(match a.statistics {
                Statistics::Multinomial => -(-g.min(1.0)).ln_1p(),
                Statistics::Poisson => g,
            }))
        }
        (Law::Continuous(a), Law::Continuous(b)) => {
            let g = continuous_gap(s, a, b)?;
            if g >= 1.0 - 1e-15 {
                return Ok(None);
            }
            Ok(Some(-(-g).ln_1p()))
        }
        _ => Err(Error::domain("cannot compare a discrete law with a density")),
    }
}

/// `ln ∫p1^s p2^{1−s}` (or `−G(s)` for Poisson-intensity laws).
pub fn chernoff_objective(l1: &Law, l2: &Law, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain("tilt must lie in [0, 1]"));
    }
    Ok(exponent_at(s, l1, l2)?.map_or(f64::NEG_INFINITY, |x| -x))
}

/// Chernoff exponent `ξ = max_s −ln ∫p1^s p2^{1−s}` by golden-section search
/// on `s` to `|Δs| ≤ 10⁻⁶`.
pub fn chernoff_exponent(l1: &Law, l2: &Law) -> Result<ExponentReport> {
    let f = |s: f64| exponent_at(s, l1, l2);
    if f(0.5)?.is_none() {
        return Ok(ExponentReport { xi: f64::INFINITY, s_star: 0.5, method: "disjoint supports".into(), leading_coefficient: None });
    }
    let val = |s: f64| -> Result<f64> { Ok(f(s)?.unwrap_or(f64::INFINITY)) };
    let (s_star, xi) = golden_max(val, 0.0, 1.0, 1e-6)?;
    let method = match l1 {
        Law::Discrete(_) => "golden-section over s, exact outcome sum",
        Law::Continuous(_) => "golden-section over s, adaptive quadrature",
    };
    Ok(ExponentReport { xi: xi.max(0.0), s_star, method: method.into(), leading_coefficient: None })
}

/// Maximizes a unimodal function on `[a, b]`, also checking the endpoints.
pub(crate) fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for e in [a, b] {
        let fe = f(e)?;
        if fe > best.1 {
            best = (e, fe);
        }
    }
    Ok(best)
}

/// Relative entropy `D(l1‖l2)`; `+∞` if `l1` is not absolutely continuous
/// with respect to `l2`. Poisson-intensity laws use the per-photon form
/// `Σ[λ1 ln(λ1/λ2) − λ1 + λ2]`.
pub fn relative_entropy(l1: &Law, l2: &Law) -> Result<f64> {
    match (l1, l2) {
        (Law::Discrete(a), Law::Discrete(b)) => {
            let bp = aligned(a, b)?;
            let mut d = 0.0;
            for (&p1, &p2) in a.probs.iter().zip(&bp) {
                if p1 <= 0.0 {
                    d += p2;
                    continue;
                }
                if p2 <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                d += p2 * kl_kernel((p1 / p2).ln());
            }
            Ok(d.max(0.0))
        }
        (Law::Continuous(a), Law::Continuous(b)) => {
            let pts = ContinuousLaw::joint_breakpoints(&[a, b]);
            let opts = QuadOptions { abs_tol: 1e-22, rel_tol: 1e-10, ..QuadOptions::default() };
            let singular = Cell::new(false);
            let r = integrate_with_breaks(
                |x| {
                    let (p1, p2) = (a.density(x), b.density(x));
                    if p1 <= 0.0 {
                        p2
                    } else if p2 <= 0.0 {
                        singular.set(true);
                        0.0
                    } else {
                        p2 * kl_kernel((p1 / p2).ln())
                    }
                },
                &pts,
                opts,
            )?;
            if singular.get() {
                return Ok(f64::INFINITY);
            }
            Ok(r.value.max(0.0))
        }
        _ => Err(Error::domain("cannot compare a discrete law with a density")),
    }
}

/// `r·eʳ − eʳ + 1`, the per-outcome KL integrand divided by `p2`.
fn kl_kernel(r: f64) -> f64 {
    if r.abs() < 1e-2 {
        // Σ_{k≥2} (k−1) r^k / k!
        let mut sum = 0.0;
        let mut term = r;
        for k in 2..=9 {
            term *= r / k as f64;
            sum += (k - 1) as f64 * term;
        }
        sum
    } else {
        r * r.exp() - r.exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Outcome;

    fn law(p: &[f64]) -> Law {
        let o = (0..p.len()).map(Outcome::Mode).collect();
        Law::Discrete(DiscreteLaw::new(o, p.to_vec(), Statistics::Multinomial).unwrap())
    }

    #[test]
    fn bernoulli_exponent_matches_closed_form() {
        // (1−a, a) vs (1, 0): ξ(s) = −s·ln(1−a), supremum as s → 1.
        let r = chernoff_exponent(&law(&[0.9, 0.1]), &law(&[1.0, 0.0])).unwrap();
        assert!((r.xi - (-(0.9f64).ln())).abs() < 1e-6, "{}", r.xi);
        let r = chernoff_exponent(&law(&[1.0, 0.0]), &law(&[0.9, 0.1])).unwrap();
        assert!((r.xi - (-(0.9f64).ln())).abs() < 1e-6);
        assert!(r.s_star < 1e-5);
    }

    #[test]
    fn identical_laws_give_zero() {
        let r = chernoff_exponent(&law(&[0.3, 0.7]), &law(&[0.3, 0.7])).unwrap();
        assert!(r.xi.abs() < 1e-15);
    }

    #[test]
    fn disjoint_laws_are_infinite() {
        let r = chernoff_exponent(&law(&[1.0, 0.0]), &law(&[0.0, 1.0])).unwrap();
        assert!(r.is_infinite());
    }

    #[test]
    fn kl_kernel_branches_agree() {
        let r: f64 = 0.0099;
        assert!((kl_kernel(r) - (r * r.exp() - r.exp_m1())).abs() < 1e-17);
    }

    #[test]
    fn symmetric_bernoulli_optimum_is_half() {
        let r = chernoff_exponent(&law(&[0.2, 0.8]), &law(&[0.8, 0.2])).unwrap();
        assert!((r.s_star - 0.5).abs() < 1e-5);
        assert!((r.xi + (2.0 * (0.16f64).sqrt()).ln()).abs() < 1e-12);
    }
}
