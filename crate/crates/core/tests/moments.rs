use num_complex::Complex64;
use proptest::prelude::*;
use subrayleigh::measure::*;
use subrayleigh::moments::*;
use subrayleigh::optics::{Interleave, ModeBasis, Psf};
use subrayleigh::scene::{mixture_components, IntensityGrid};

// σ = 0.5 gives Δk = 1.
fn psf() -> Psf {
    Psf::gaussian(0.5).unwrap()
}

fn point_1d(x0: f64) -> IntensityGrid {
    // 41 pixels of pitch 0.01; x0 must sit on a pixel centre.
    IntensityGrid::from_fn(41, 1, 0.01, |x, _| if (x - x0).abs() < 1e-9 { 1.0 } else { 0.0 }).unwrap()
}

fn two_bars() -> IntensityGrid {
    IntensityGrid::from_fn(41, 1, 0.01, |x, _| if (0.05..=0.1).contains(&x.abs()) { 1.0 } else { 0.0 }).unwrap()
}

fn sorter_law(grid: &IntensityGrid, basis: ModeBasis) -> DiscreteLaw {
    let r = Receiver::spade(basis);
    r.law(&psf(), &mixture_components(grid)).unwrap().as_discrete().unwrap().clone()
}

#[test]
fn coherent_moments_of_a_point_field() {
    let f = FieldGrid::from_fn(5, 5, 0.1, |x, y| {
        if x.abs() < 1e-12 && y.abs() < 1e-12 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .unwrap();
    assert!((coherent_moment(&f, 0, 0, 1.0) - 1.0).norm() < 1e-15);
    for (m, n) in [(1, 0), (0, 1), (2, 3)] {
        assert_eq!(coherent_moment(&f, m, n, 1.0).norm(), 0.0);
    }
}

#[test]
fn coherent_moment_ratio_tracks_offset() {
    let mut last = f64::INFINITY;
    for w in [0.1, 0.03, 0.01] {
        let x0 = 0.2;
        let f = FieldGrid::from_fn(401, 1, 0.002, |x, _| Complex64::new((-(x - x0).powi(2) / (2.0 * w * w)).exp(), 0.0))
            .unwrap();
        let r = coherent_moment(&f, 1, 0, 1.0).re / coherent_moment(&f, 0, 0, 1.0).re;
        let err = (r - x0).abs();
        assert!(err < last, "width {w}: {r}");
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn point_source_moment_closed_form() {
    let x0: f64 = 0.15;
    let g = point_1d(x0);
    let p1 = incoherent_moment(&g, 1, 0, 1.0);
    assert!((p1 - x0 * x0 * (-x0 * x0).exp()).abs() < 1e-15);
    let law = sorter_law(&g, ModeBasis::hermite_gaussian(0.5, 6).unwrap());
    assert!((law.prob(Outcome::Mode(1)).unwrap() - p1).abs() < 1e-12);
    let centred = point_1d(0.0);
    for m in 1..5 {
        assert_eq!(incoherent_moment(&centred, m, 0, 1.0), 0.0);
    }
}

#[test]
fn moments_equal_sorter_probabilities_in_two_dimensions() {
    let g = IntensityGrid::from_fn(7, 5, 0.05, |x, y| 1.0 + x - 0.5 * y + x * y).unwrap();
    let law = sorter_law(&g, ModeBasis::hermite_gaussian(0.5, 10).unwrap().two_dimensional());
    for m in 0..=5 {
        for n in 0..=5 {
            let p = law.prob(Outcome::Mode2(m, n)).unwrap();
            assert!((incoherent_moment(&g, m, n, 1.0) - p).abs() < 1e-9, "({m},{n})");
        }
    }
}

#[test]
fn odd_moments_equal_interleaved_count_differences() {
    let g = two_bars().mirrored_x();
    let asym = IntensityGrid::new(
        41,
        1,
        0.01,
        g.values().iter().enumerate().map(|(i, v)| v * (1.0 + i as f64 / 40.0)).collect(),
    )
    .unwrap();
    for pattern in [Interleave::Paired, Interleave::Shifted] {
        let law = sorter_law(&asym, ModeBasis::interleaved(0.5, 8, pattern).unwrap());
        for (o, p) in law.outcomes.iter().zip(&law.probs) {
            if let Outcome::Pair { lo, plus: true, n } = *o {
                // The partner of the last retained mode may be cut off.
                let Some(q) = law.prob(Outcome::Pair { lo, plus: false, n }) else { continue };
                assert!((0.5 * (p - q) - odd_moment(&asym, lo, n, 1.0)).abs() < 1e-12);
            }
        }
    }
}

fn two_bar_record(n: u64, seed: u64) -> DetectionRecord {
    let g = two_bars();
    let model = FnModel::new("spade", &[], move |_p: &[f64]| {
        Receiver::spade(ModeBasis::hermite_gaussian(0.5, 8).unwrap()).law(&psf(), &mixture_components(&g))
    });
    sample_record(&model, &[], n, Budget::FixedN, seed).unwrap()
}

#[test]
fn estimated_moment_within_binomial_error() {
    let rec = two_bar_record(1_000_000, 1);
    let set = estimate_moments(&rec, &[]).unwrap();
    assert_eq!(set.coverage, ParityCoverage::EvenOnly);
    let e = set.get(1, 0).unwrap();
    let truth = incoherent_moment(&two_bars(), 1, 0, 1.0);
    assert!((e.value - truth).abs() < 3.0 * e.stderr, "{} vs {truth} ± {}", e.value, e.stderr);
}

#[test]
fn moment_table_roundtrip_keeps_photons() {
    let set = estimate_moments(&two_bar_record(5_000, 3), &[]).unwrap();
    let back = MomentSet::from_csv(&set.to_csv()).unwrap();
    assert_eq!(back.photons, 5_000);
    assert_eq!(back.even.len(), set.even.len());
    for (a, b) in back.even.iter().zip(&set.even) {
        assert!((a.value - b.value).abs() <= 1e-12 * b.value.abs().max(1e-300));
    }
    let exact = MomentSet::from_csv("kind,m,n,value,stderr\neven,0,0,1,0\n").unwrap();
    assert_eq!(exact.photons, 0);
    let opts = ReconstructOptions::new(11, 1, 0.05).with_auto_lambda();
    assert!(reconstruct(&exact, 1.0, &opts).is_err());
    let r = reconstruct(&back, 1.0, &opts).unwrap();
    assert!(r.lambda > 0.0 && r.chi2_per_constraint.unwrap() <= 1.0 + 1e-9);
}

#[test]
fn point_scene_has_no_higher_moments() {
    let g = point_1d(0.0);
    let model = FnModel::new("spade", &[], move |_p: &[f64]| {
        Receiver::spade(ModeBasis::hermite_gaussian(0.5, 6).unwrap()).law(&psf(), &mixture_components(&g))
    });
    let set = estimate_moments(&sample_record(&model, &[], 10_000, Budget::FixedN, 2).unwrap(), &[]).unwrap();
    for e in &set.even {
        if e.m > 0 {
            assert_eq!(e.value, 0.0);
        }
    }
}

#[test]
fn standard_errors_scale_with_photons() {
    // Binomial errors at fixed P̂: quadrupling N halves them.
    let mk = |counts: [u64; 2], n: u64| DetectionRecord {
        receiver: "spade".into(),
        params: vec![],
        photons: n,
        budget: Budget::FixedN,
        seed: 0,
        emitted: n,
        outcomes: vec![Outcome::Mode(0), Outcome::Mode(1)],
        counts: counts.to_vec(),
        positions: vec![],
    };
    let a = estimate_moments(&mk([900, 100], 1000), &[]).unwrap();
    let b = estimate_moments(&mk([3600, 400], 4000), &[]).unwrap();
    let r = b.get(1, 0).unwrap().stderr / a.get(1, 0).unwrap().stderr;
    assert!((r - 0.5).abs() < 1e-12);
}

#[test]
fn estimates_are_unbiased_across_seeds() {
    let truth = incoherent_moment(&two_bars(), 1, 0, 1.0);
    let inside = (0..100)
        .filter(|&s| {
            let e = *estimate_moments(&two_bar_record(20_000, 100 + s), &[]).unwrap().get(1, 0).unwrap();
            (e.value - truth).abs() <= 3.0 * e.stderr
        })
        .count();
    assert!(inside >= 95, "{inside}");
}

#[test]
fn interleaved_records_supply_odd_moments() {
    let g = IntensityGrid::from_fn(41, 1, 0.01, |x, _| if (0.02..=0.15).contains(&x) { 1.0 } else { 0.0 }).unwrap();
    let g2 = g.clone();
    let hg = FnModel::new("spade", &[], move |_p: &[f64]| {
        Receiver::spade(ModeBasis::hermite_gaussian(0.5, 8).unwrap()).law(&psf(), &mixture_components(&g2))
    });
    let g3 = g.clone();
    let il = FnModel::new("spade", &[], move |_p: &[f64]| {
        Receiver::spade(ModeBasis::interleaved(0.5, 8, Interleave::Paired).unwrap()).law(&psf(), &mixture_components(&g3))
    });
    let r1 = sample_record(&hg, &[], 200_000, Budget::FixedN, 3).unwrap();
    let r2 = sample_record(&il, &[], 200_000, Budget::FixedN, 4).unwrap();
    let set = estimate_moments(&r1, &[r2]).unwrap();
    assert_eq!(set.coverage, ParityCoverage::Interleaved);
    let o = set.get_odd(0, 0).unwrap();
    let truth = odd_moment(&g, 0, 0, 1.0);
    assert!((o.value - truth).abs() < 4.0 * o.stderr, "{} vs {truth}", o.value);
    assert!(set.to_csv().lines().any(|l| l.starts_with("odd,0,0,")));
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

#[test]
fn point_source_reconstruction_peak() {
    let truth = IntensityGrid::from_fn(21, 1, 0.025, |x, _| if (x - 0.1).abs() < 1e-9 { 1.0 } else { 0.0 }).unwrap();
    let set = MomentSet::exact(&truth, 1.0, 4, true);
    let rec = reconstruct(&set, 1.0, &ReconstructOptions::new(21, 1, 0.025).with_max_order(4)).unwrap();
    let (i_hat, i_true) = (argmax(rec.grid.values()), argmax(truth.values()));
    assert!((i_hat as i64 - i_true as i64).abs() <= 1, "{i_hat} vs {i_true}");
    assert!(rec.grid.values().iter().all(|v| *v >= 0.0));
    assert!((rec.grid.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn even_only_reconstruction_is_the_symmetric_part() {
    let bar = IntensityGrid::from_fn(21, 1, 0.025, |x, _| if (0.05..=0.2).contains(&x) { 1.0 } else { 0.0 }).unwrap();
    let opts = ReconstructOptions::new(21, 1, 0.025);
    let a = reconstruct(&MomentSet::exact(&bar, 1.0, 8, false), 1.0, &opts).unwrap();
    let b = reconstruct(&MomentSet::exact(&bar.symmetrized(), 1.0, 8, false), 1.0, &opts).unwrap();
    for (x, y) in a.grid.values().iter().zip(b.grid.values()) {
        assert!((x - y).abs() < 1e-8);
    }
    let v = a.grid.values();
    for i in 0..21 {
        assert!((v[i] - v[20 - i]).abs() < 1e-8);
    }
    // Closer to the symmetrized bar than to the bar itself.
    let dist = |g: &IntensityGrid| v.iter().zip(g.values()).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    assert!(dist(&bar.symmetrized()) < dist(&bar));
}

#[test]
fn heavy_smoothing_gives_a_flat_image() {
    let bar = two_bars();
    let set = MomentSet::exact(&bar, 1.0, 4, false);
    let rec = reconstruct(&set, 1.0, &ReconstructOptions::new(11, 1, 0.05).with_lambda(1e12)).unwrap();
    let v = rec.grid.values();
    assert!(v.iter().all(|x| (x - 1.0 / 11.0).abs() < 1e-6), "{v:?}");
}

#[test]
fn reconstruction_error_shrinks_with_order() {
    // Support ±0.25/Δk.
    let object = IntensityGrid::from_fn(11, 1, 0.05, |x, _| (1.0 - (x / 0.3).powi(2)) * (1.0 + x)).unwrap();
    let mut last = f64::INFINITY;
    for order in [2, 4, 6, 8] {
        let set = MomentSet::exact(&object, 1.0, order, true);
        let rec = reconstruct(&set, 1.0, &ReconstructOptions::new(11, 1, 0.05).with_lambda(1e-6).with_max_order(order)).unwrap();
        let err: f64 = rec.grid.values().iter().zip(object.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= last * (1.0 + 1e-6), "order {order}: {err} > {last}");
        last = err;
    }
}

#[test]
fn baseline_of_a_point_is_the_psf() {
    let g = IntensityGrid::from_fn(5, 5, 0.1, |x, y| if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 }).unwrap();
    let out = diffraction_baseline(&g, &psf()).unwrap();
    let norm: f64 = (0..out.width())
        .map(|i| {
            let (x, _) = out.coords(i, 0);
            psf().intensity(x)
        })
        .sum();
    for j in 0..out.height() {
        for i in 0..out.width() {
            let (x, y) = out.coords(i, j);
            let expect = psf().intensity(x) * psf().intensity(y) / (norm * norm);
            assert!((out.get(i, j) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn baseline_spectrum_is_the_otf() {
    // Discrete Fourier transform of the blurred point source.
    let pitch = 0.05;
    let g = IntensityGrid::from_fn(1, 1, pitch, |_, _| 1.0).unwrap();
    let out = diffraction_baseline(&g, &psf()).unwrap();
    for k in [0.5, 1.0, 2.0, 3.0] {
        let ft: f64 = (0..out.width()).map(|i| out.get(i, 0) * (k * out.coords(i, 0).0).cos()).sum();
        // Gaussian of RMS width 2Δk.
        let expect = (-(k * k) / 8.0).exp();
        assert!((ft - expect).abs() < 1e-9, "k={k}: {ft} vs {expect}");
        assert!((optical_transfer_function(&psf(), k).unwrap() - expect).abs() < 1e-15);
    }
    let sinc = Psf::sinc(2.0).unwrap();
    assert!((optical_transfer_function(&sinc, 1.0).unwrap() - 0.75).abs() < 1e-15);
    assert_eq!(optical_transfer_function(&sinc, 5.0).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn moments_match_sorter_on_random_grids(vals in proptest::collection::vec(0.0f64..1.0, 25), pitch in 0.02f64..0.2) {
        prop_assume!(vals.iter().sum::<f64>() > 0.1);
        let g = IntensityGrid::new(5, 5, pitch, vals).unwrap();
        let law = sorter_law(&g, ModeBasis::hermite_gaussian(0.5, 10).unwrap().two_dimensional());
        for m in 0..=5 {
            for n in 0..=5 {
                prop_assert!((incoherent_moment(&g, m, n, 1.0) - law.prob(Outcome::Mode2(m, n)).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn convolution_preserves_total(vals in proptest::collection::vec(0.0f64..1.0, 12)) {
        prop_assume!(vals.iter().sum::<f64>() > 0.1);
        let g = IntensityGrid::new(4, 3, 0.1, vals.clone()).unwrap();
        let out = diffraction_baseline(&g, &psf()).unwrap();
        prop_assert!((out.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
