use proptest::prelude::*;
use subrayleigh::hypothesis::*;
use subrayleigh::measure::*;
use subrayleigh::optics::{ModeBasis, Psf};
use subrayleigh::scene::{Emitter, IntensityGrid};

fn psf() -> Psf {
    Psf::gaussian(0.5).unwrap()
}

fn one() -> Vec<Emitter> {
    vec![Emitter::new(1.0, 0.0)]
}

fn two(theta: f64) -> Vec<Emitter> {
    vec![Emitter::new(0.5, -theta / 2.0), Emitter::new(0.5, theta / 2.0)]
}

fn laws(r: &Receiver, theta: f64) -> (Law, Law) {
    (r.law(&psf(), &one()).unwrap(), r.law(&psf(), &two(theta)).unwrap())
}

fn spade() -> Receiver {
    Receiver::spade(ModeBasis::hermite_gaussian(0.5, 40).unwrap())
}

#[test]
fn spade_exponent_matches_quantum() {
    // Δk = 1 here, so θΔk = θ.
    for t in [0.2, 1.0] {
        let (a, b) = laws(&spade(), t);
        let xi = chernoff_exponent(&a, &b).unwrap().xi;
        let q = qce_pure(&psf(), &one(), &two(t)).unwrap().xi;
        // ξ_Q = −ln e^{−θ²/4} exactly for the Gaussian pair.
        assert!((q - t * t / 4.0).abs() < 1e-14);
        assert!((xi / q - 1.0).abs() < 1e-5, "θ={t}: {xi} vs {q}");
    }
}

#[test]
fn direct_exponent_leading_coefficient() {
    let t = 0.2;
    let (a, b) = laws(&Receiver::direct(), t);
    let r = chernoff_exponent(&a, &b).unwrap();
    let c = r.xi / t.powi(4);
    assert!((c / (1.0 / 16.0) - 1.0).abs() < 0.05, "{c}");
    assert!((r.s_star - 0.5).abs() < 0.05);
}

#[test]
fn sliver_exponent_leading_coefficient() {
    let t = 0.05;
    let (a, b) = laws(&Receiver::sliver(), t);
    let c = chernoff_exponent(&a, &b).unwrap().xi / (t * t);
    assert!((c / 0.25 - 1.0).abs() < 0.02, "{c}");
}

#[test]
fn exponents_are_symmetric_and_below_quantum() {
    for t in [0.1, 0.5, 1.5] {
        let q = qce_pure(&psf(), &one(), &two(t)).unwrap().xi;
        for r in [Receiver::direct(), Receiver::sliver(), Receiver::splice(), spade()] {
            let (a, b) = laws(&r, t);
            let x12 = chernoff_exponent(&a, &b).unwrap().xi;
            let x21 = chernoff_exponent(&b, &a).unwrap().xi;
            assert!((x12 - x21).abs() < 1e-7 * x12.max(1e-12), "{:?} θ={t}", r.kind());
            assert!(x12 <= q + 1e-6, "{:?} θ={t}: {x12} > {q}", r.kind());
        }
    }
}

#[test]
fn quadratic_gap_between_spade_and_direct() {
    let ts = [0.05, 0.1, 0.2, 0.4];
    let ratios: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let (a, b) = laws(&spade(), t);
            let (c, d) = laws(&Receiver::direct(), t);
            chernoff_exponent(&a, &b).unwrap().xi / chernoff_exponent(&c, &d).unwrap().xi
        })
        .collect();
    let slope = subrayleigh::fit::log_log_slope(&ts, &ratios).unwrap();
    assert!((slope + 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn exoplanet_leading_order_values() {
    // Frozen from b(1 − e^{−(θΔk)²}) and ½(e^{4(θΔk)²} − 1)b² at b = 0.01, θΔk = 1.
    let e = exoplanet_relative_entropies(0.01, 1.0, 1.0).unwrap();
    assert!((e.quantum - 6.321_205_588_285_577e-3).abs() < 1e-15);
    assert!((e.direct - 2.679_907_502_e-3).abs() < 1e-12);
    assert!(e.leading_order);
}

#[test]
fn exoplanet_forms_match_exact_values_for_small_b() {
    let b = 1e-4;
    let t = 0.5;
    let star = vec![Emitter::new(1.0, 0.0)];
    let sys = vec![Emitter::new(1.0 - b, 0.0), Emitter::new(b, t)];
    let e = exoplanet_relative_entropies(b, t, 1.0).unwrap();
    let dq = quantum_relative_entropy_pure(&psf(), &star, &sys).unwrap();
    assert!((dq / e.quantum - 1.0).abs() < 1e-2, "{dq} vs {}", e.quantum);
    let (p1, p2) = (Receiver::direct().law(&psf(), &star).unwrap(), Receiver::direct().law(&psf(), &sys).unwrap());
    let dc = relative_entropy(&p1, &p2).unwrap();
    assert!((dc / e.direct - 1.0).abs() < 1e-2, "{dc} vs {}", e.direct);
}

#[test]
fn relative_entropy_of_equal_laws_is_zero() {
    let (a, _) = laws(&spade(), 0.3);
    assert_eq!(relative_entropy(&a, &a).unwrap(), 0.0);
}

#[test]
fn second_moment_library() {
    let dot = IntensityGrid::from_fn(5, 5, 0.05, |x, y| if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 }).unwrap();
    let bar = IntensityGrid::from_fn(5, 5, 0.05, |_, y| if y == 0.0 { 1.0 } else { 0.0 }).unwrap();
    let pair = IntensityGrid::from_fn(5, 5, 0.05, |x, y| if y == 0.0 && x.abs() > 0.09 { 1.0 } else { 0.0 }).unwrap();
    let m = pairwise_qce_matrix(&[dot.clone(), bar.clone(), pair.clone()], 1.0).unwrap();
    // Point vs object: Δk²·(m_x² + m_y²) exactly.
    let (mx, my) = subrayleigh::scene::second_moments(&bar);
    assert!((m[(0, 1)] - (mx + my)).abs() < 1e-6 * (mx + my));
    assert_eq!(m_ary_qce(&m).unwrap(), m[(0, 1)].min(m[(0, 2)]).min(m[(1, 2)]));
}

#[test]
fn identical_hypotheses_give_chance_level() {
    let (a, _) = laws(&Receiver::sliver(), 0.3);
    let pair = HypothesisPair::symmetric(a.clone(), a);
    let r = simulate_discrimination(&pair, &[10, 20], 4000, 1, SamplingMethod::Plain).unwrap();
    for p in &r.points {
        assert!((p.p_error - 0.5).abs() < 1e-12);
    }
}

#[test]
fn importance_sampling_is_exact_for_spade() {
    let (a, b) = laws(&spade(), 1.0);
    let pair = HypothesisPair::symmetric(a, b);
    let r = simulate_discrimination(&pair, &[20, 40], 1000, 3, SamplingMethod::Importance).unwrap();
    for p in &r.points {
        let exact = 0.5 * (-(p.photons as f64) * 0.25).exp();
        assert!((p.p_error / exact - 1.0).abs() < 1e-9, "{} vs {exact}", p.p_error);
    }
    assert!((r.fitted_exponent.unwrap() - 0.25).abs() < 1e-6);
}

#[test]
fn plain_and_importance_sampling_agree_for_direct_imaging() {
    let (a, b) = laws(&Receiver::direct(), 1.0);
    let pair = HypothesisPair::symmetric(a, b);
    let ns = [10, 30];
    let p = simulate_discrimination(&pair, &ns, 20000, 5, SamplingMethod::Plain).unwrap();
    let i = simulate_discrimination(&pair, &ns, 20000, 5, SamplingMethod::Importance).unwrap();
    for (x, y) in p.points.iter().zip(&i.points) {
        let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        assert!((x.p_error - y.p_error).abs() < 4.0 * se, "{} vs {} ± {se}", x.p_error, y.p_error);
    }
}

#[test]
fn discrimination_is_reproducible() {
    let (a, b) = laws(&Receiver::sliver(), 0.8);
    let pair = HypothesisPair::symmetric(a, b);
    let r1 = simulate_discrimination(&pair, &[10, 20], 3000, 9, SamplingMethod::Plain).unwrap();
    let r2 = simulate_discrimination(&pair, &[10, 20], 3000, 9, SamplingMethod::Plain).unwrap();
    assert_eq!(r1.to_csv(), r2.to_csv());
}

fn arb_pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.001f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn law_of(p: Vec<f64>) -> Law {
    let o = (0..p.len()).map(Outcome::Mode).collect();
    Law::Discrete(DiscreteLaw::new(o, p, Statistics::Multinomial).unwrap())
}

proptest! {
    #[test]
    fn objective_is_convex_in_s(p in arb_pmf(5), q in arb_pmf(5), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        let (a, b) = (law_of(p), law_of(q));
        let f = |s| chernoff_objective(&a, &b, s).unwrap();
        let mid = f(0.5 * (s1 + s2));
        prop_assert!(mid <= 0.5 * (f(s1) + f(s2)) + 1e-12);
    }

    #[test]
    fn exponent_is_symmetric(p in arb_pmf(4), q in arb_pmf(4)) {
        let (a, b) = (law_of(p), law_of(q));
        let x = chernoff_exponent(&a, &b).unwrap();
        let y = chernoff_exponent(&b, &a).unwrap();
        prop_assert!((x.xi - y.xi).abs() < 1e-9);
        prop_assert!(x.xi >= 0.0 && (0.0..=1.0).contains(&x.s_star));
    }
}
