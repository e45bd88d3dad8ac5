use proptest::prelude::*;
use subrayleigh::estimate::*;
use subrayleigh::information::{bias_corrected_crb, crb, fisher_scalar};
use subrayleigh::measure::*;
use subrayleigh::optics::{ModeBasis, Psf};
use subrayleigh::scene::TwoPointScene;

// σ = 0.5 gives Δk = 1 throughout.
fn psf() -> Psf {
    Psf::gaussian(0.5).unwrap()
}

fn spade_model() -> ReceiverModel<PairFamily> {
    let basis = ModeBasis::hermite_gaussian(0.5, 20).unwrap();
    spade_pmf(&TwoPointScene::equal(0.0).unwrap(), &psf(), &basis).unwrap()
}

fn closed_form() -> EstimatorSpec {
    EstimatorSpec::new(EstimatorKind::SpadeClosedForm, 1.0)
}

fn mode_record(counts: &[(usize, u64)], photons: u64) -> DetectionRecord {
    DetectionRecord {
        receiver: "spade".into(),
        params: vec![],
        photons,
        budget: Budget::FixedN,
        seed: 0,
        emitted: photons,
        outcomes: counts.iter().map(|&(n, _)| Outcome::Mode(n)).collect(),
        counts: counts.iter().map(|&(_, c)| c).collect(),
        positions: vec![],
    }
}

#[test]
fn closed_form_inversion() {
    assert_eq!(spade_mle_separation(&mode_record(&[(0, 100), (1, 0)], 100), 1.0).unwrap(), 0.0);
    // n = N·Q with Q = 0.01 inverts to θ = 0.2.
    let r = mode_record(&[(0, 9900), (1, 100)], 10_000);
    assert!((spade_mle_separation(&r, 1.0).unwrap() - 0.2).abs() < 1e-15);
}

#[test]
fn spade_mse_is_zero_at_zero_separation() {
    let mc = monte_carlo_mse(&spade_model(), &closed_form(), &[0.0], 100, 2000, 1).unwrap();
    assert_eq!(mc.mse[0], 0.0);
    let exact = spade_mle_mse_exact(0.0, 100, 1.0).unwrap();
    assert_eq!(exact.mse, 0.0);
}

#[test]
fn spade_mse_matches_poisson_sum() {
    let mc = monte_carlo_mse(&spade_model(), &closed_form(), &[0.3], 100, 100_000, 2).unwrap();
    let exact = spade_mle_mse_exact(0.3, 100, 1.0).unwrap();
    assert!((mc.mse[0] - exact.mse).abs() < 3.0 * mc.mse_stderr[0], "{} vs {} ± {}", mc.mse[0], exact.mse, mc.mse_stderr[0]);
}

#[test]
fn poisson_sum_against_direct_summation() {
    // Independent oracle: plain recursive Poisson weights.
    let (theta, n) = (0.5f64, 40u64);
    let lam = n as f64 * theta * theta / 4.0;
    let mut w = (-lam).exp();
    let mut mse = 0.0;
    for k in 0..200u64 {
        if k > 0 {
            w *= lam / k as f64;
        }
        mse += w * (2.0 * (k as f64 / n as f64).sqrt() - theta).powi(2);
    }
    let e = spade_mle_mse_exact(theta, n, 1.0).unwrap();
    assert!((e.mse / mse - 1.0).abs() < 1e-12);
    // Derivative of the mean by finite differences.
    let h = 1e-5;
    let d = (spade_mle_mse_exact(theta + h, n, 1.0).unwrap().mean - spade_mle_mse_exact(theta - h, n, 1.0).unwrap().mean)
        / (2.0 * h);
    assert!((e.bias_derivative - (d - 1.0)).abs() < 1e-7);
}

#[test]
fn large_separation_approaches_quantum_limit() {
    for t in [2.0, 3.0] {
        let e = spade_mle_mse_exact(t, 1000, 1.0).unwrap();
        assert!((1000.0 * e.mse - 1.0).abs() < 0.05, "θ={t}: {}", 1000.0 * e.mse);
    }
    let mc = monte_carlo_mse(&spade_model(), &closed_form(), &[2.5], 1000, 20_000, 3).unwrap();
    assert!((1000.0 * mc.mse[0] - 1.0).abs() < 0.05 + 3000.0 * mc.mse_stderr[0]);
}

#[test]
fn bias_of_constant_estimator_is_minus_theta() {
    let spec = EstimatorSpec::new(EstimatorKind::Constant(0.0), 1.0);
    let grid = [0.1, 0.2, 0.3];
    let mc = monte_carlo_mse(&spade_model(), &spec, &grid, 50, 1000, 4).unwrap();
    let b = empirical_bias(&mc).unwrap();
    for (t, bi) in grid.iter().zip(&b.bias) {
        assert_eq!(*bi, -t);
    }
    assert!(b.derivative.iter().all(|d| (d + 1.0).abs() < 1e-12));
}

#[test]
fn spade_bias_at_small_separation() {
    let grid = [0.005, 0.01, 0.015];
    let mc = monte_carlo_mse(&spade_model(), &closed_form(), &grid, 10, 20_000, 5).unwrap();
    let b = empirical_bias(&mc).unwrap();
    for (i, t) in grid.iter().enumerate() {
        assert!((b.bias[i] + t).abs() < 0.05 * t + 4.0 * b.stderr[i], "{} at {t}", b.bias[i]);
    }
    assert!((b.derivative[1] + 1.0).abs() < 0.1, "{}", b.derivative[1]);
}

#[test]
fn unbiased_regime() {
    let mc = monte_carlo_mse(&spade_model(), &closed_form(), &[3.0], 1000, 20_000, 6).unwrap();
    let b = empirical_bias(&mc);
    assert!(b.is_err());
    let se = (mc.variance[0] / 20_000.0).sqrt();
    assert!(mc.bias[0].abs() < 4.0 * se + 1e-3, "{} ± {se}", mc.bias[0]);
}

#[test]
fn mse_decomposition_and_replay() {
    let grid = [0.1, 0.5, 1.0];
    let a = monte_carlo_mse(&spade_model(), &closed_form(), &grid, 30, 5000, 7).unwrap();
    let b = monte_carlo_mse(&spade_model(), &closed_form(), &grid, 30, 5000, 7).unwrap();
    assert_eq!(a, b);
    for i in 0..grid.len() {
        assert!((a.mse[i] - (a.variance[i] + a.bias[i].powi(2))).abs() <= 1e-12);
    }
    let back = MCResult::from_csv(&a.to_csv()).unwrap();
    assert_eq!(back.theta, a.theta);
    assert_eq!(back.receiver, a.receiver);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn empirical_mse_respects_bias_corrected_bound() {
    let grid: Vec<f64> = (0..=24).map(|i| 0.05 * i as f64).collect();
    for n in [10u64, 100] {
        let mc = monte_carlo_mse(&spade_model(), &closed_form(), &grid, n, 50_000, 8).unwrap();
        let b = empirical_bias(&mc).unwrap();
        // Central differences need a neighbour on each side.
        for i in 1..grid.len() - 1 {
            // SPADE Fisher information is Δk² = 1 per photon.
            let bound = bias_corrected_crb(b.bias[i], b.derivative[i], 1.0, n as f64, grid[i]);
            assert!(mc.mse[i] >= bound - 3.0 * mc.mse_stderr[i], "N={n} θ={}: {} < {bound}", grid[i], mc.mse[i]);
        }
    }
}

#[test]
fn sub_crb_region_shrinks_with_photons() {
    let grid: Vec<f64> = (1..=300).map(|i| 0.01 * i as f64).collect();
    let region = |n: u64| -> Vec<bool> {
        grid.iter().map(|&t| spade_mle_mse_exact(t, n, 1.0).unwrap().mse < crb(1.0, n as f64)).collect()
    };
    let (r10, r100, r1000) = (region(10), region(100), region(1000));
    let count = |r: &[bool]| r.iter().filter(|&&b| b).count();
    assert!(count(&r10) > count(&r100) && count(&r100) > count(&r1000) && count(&r1000) > 0);
    for i in 0..grid.len() {
        assert!(!r100[i] || r10[i], "θ={}", grid[i]);
        assert!(!r1000[i] || r100[i], "θ={}", grid[i]);
    }
}

#[test]
fn misaligned_sorter_information_is_quadratic() {
    let basis = ModeBasis::hermite_gaussian(0.5, 30).unwrap();
    let model = ReceiverModel::new(
        Receiver::spade(basis).with_offset(0.3),
        psf(),
        PairFamily::separation(TwoPointScene::equal(0.0).unwrap()),
    );
    let ts = [0.01, 0.02, 0.04, 0.08];
    let fi: Vec<f64> = ts.iter().map(|&t| fisher_scalar(&model, t, 1e-4).unwrap().value).collect();
    let slope = subrayleigh::fit::log_log_slope(&ts, &fi).unwrap();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn direct_numeric_mle_within_three_crb_widths() {
    let model = direct_pdf(&TwoPointScene::equal(0.0).unwrap(), &psf());
    let rec = sample_record(&model, &[2.0], 10_000, Budget::FixedN, 11).unwrap();
    let spec = EstimatorSpec::new(EstimatorKind::DirectMleNumeric, 1.0);
    let fit = numeric_mle(&rec, &model, &spec).unwrap();
    let fi = fisher_scalar(&model, 2.0, 1e-3).unwrap().value;
    let width = crb(fi, 10_000.0).sqrt();
    assert!(!fit.degenerate);
    assert!((fit.params[0] - 2.0).abs() < 3.0 * width, "{} ± {width}", fit.params[0]);
}

#[test]
fn sample_mean_is_the_gaussian_location_mle() {
    let model = ReceiverModel::new(Receiver::direct(), psf(), Localization);
    let rec = sample_record(&model, &[0.3], 2000, Budget::FixedN, 12).unwrap();
    let mean = sample_mean_centroid(&rec).unwrap();
    let spec = EstimatorSpec::new(EstimatorKind::GenericMleNumeric, 1.0).with_bounds(vec![(-1.0, 1.0)]);
    let fit = numeric_mle(&rec, &model, &spec).unwrap();
    assert!((fit.params[0] - mean).abs() < 1e-5, "{} vs {mean}", fit.params[0]);
}

#[test]
fn zero_separation_spade_record_estimates_zero() {
    let rec = sample_record(&spade_model(), &[0.0], 1000, Budget::FixedN, 13).unwrap();
    assert_eq!(spade_mle_separation(&rec, 1.0).unwrap(), 0.0);
}

#[test]
fn flat_likelihood_is_flagged() {
    let model = FnModel::new("flat", &["t"], |_p: &[f64]| {
        Ok(Law::Discrete(DiscreteLaw::new(vec![Outcome::Mode(0), Outcome::Mode(1)], vec![0.5, 0.5], Statistics::Multinomial)?))
    });
    let rec = sample_record(&model, &[0.0], 100, Budget::FixedN, 14).unwrap();
    let spec = EstimatorSpec::new(EstimatorKind::GenericMleNumeric, 1.0).with_bounds(vec![(0.5, 2.0)]);
    let fit = numeric_mle(&rec, &model, &spec).unwrap();
    assert!(fit.degenerate);
    assert_eq!(fit.params[0], 0.5);
}

#[test]
fn known_centroid_reduces_to_aligned_spade() {
    let scene = TwoPointScene::new(0.7, 0.2, 0.5).unwrap();
    let cfg = AdaptiveConfig::new(10_000).with_known_centroid(0.7);
    let a = adaptive_mse(&scene, &psf(), &cfg, 4000, 15).unwrap();
    let exact = spade_mle_mse_exact(0.2, 10_000, 1.0).unwrap().mse;
    assert!((a.mse - exact).abs() < 3.0 * a.mse_stderr, "{} vs {exact}", a.mse);
    let e = two_stage_adaptive(&scene, &psf(), &cfg, 1).unwrap();
    assert_eq!((e.stage1_photons, e.stage2_photons, e.centroid), (0, 10_000, 0.7));
}

#[test]
fn starving_the_sorter_grows_the_error() {
    let scene = TwoPointScene::new(0.1, 0.2, 0.5).unwrap();
    let mses: Vec<f64> = [0.9, 0.95, 0.99]
        .iter()
        .map(|&f| adaptive_mse(&scene, &psf(), &AdaptiveConfig::new(10_000).with_split(f), 2000, 16).unwrap().mse)
        .collect();
    assert!(mses.windows(2).all(|w| w[1] > w[0]), "{mses:?}");
    assert!(two_stage_adaptive(&scene, &psf(), &AdaptiveConfig::new(100).with_split(1.0), 0).is_err());
}

#[test]
fn adaptive_beats_direct_imaging() {
    let scene = TwoPointScene::new(0.05, 0.2, 0.5).unwrap();
    let a = adaptive_mse(&scene, &psf(), &AdaptiveConfig::new(10_000), 2000, 17).unwrap();
    let model = direct_pdf(&TwoPointScene::equal(0.0).unwrap(), &psf());
    let fi = fisher_scalar(&model, 0.2, 1e-3).unwrap().value;
    assert!(a.mse < crb(fi, 10_000.0), "{} vs {}", a.mse, crb(fi, 10_000.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn mse_identity_holds_for_any_seed(seed in any::<u64>(), t in 0.0f64..2.0, n in 5u64..200) {
        let mc = monte_carlo_mse(&spade_model(), &closed_form(), &[t], n, 500, seed).unwrap();
        prop_assert!((mc.mse[0] - mc.variance[0] - mc.bias[0].powi(2)).abs() <= 1e-12);
        prop_assert!(mc.variance[0] >= -1e-12);
    }
}
