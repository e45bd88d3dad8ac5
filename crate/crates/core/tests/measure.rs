use proptest::prelude::*;
use subrayleigh::measure::*;
use subrayleigh::optics::{ModeBasis, Psf};
use subrayleigh::scene::{mixture_components, Emitter, TwoPointScene};

fn psf() -> Psf {
    Psf::gaussian(0.5).unwrap()
}

fn pair(theta: f64) -> Vec<Emitter> {
    mixture_components(&TwoPointScene::equal(theta).unwrap())
}

fn discrete(r: &Receiver, emitters: &[Emitter]) -> DiscreteLaw {
    r.law(&psf(), emitters).unwrap().as_discrete().unwrap().clone()
}

#[test]
fn sliver_is_the_parity_marginal_of_spade() {
    let basis = ModeBasis::parity(psf().width_param(), 60).unwrap();
    for theta in [0.05, 0.4, 1.0, 2.5] {
        let sliver = discrete(&Receiver::sliver(), &pair(theta));
        let parity = discrete(&Receiver::spade(basis.clone()), &pair(theta));
        let (a, b) = (sliver.prob(Outcome::Odd).unwrap(), parity.prob(Outcome::Odd).unwrap());
        assert!((a - b).abs() < 1e-12, "θ={theta}: {a} vs {b}");
    }
}

#[test]
fn sliver_odd_fraction_closed_form() {
    // Each emitter sits θ/2 off axis, so Q = (θΔk/2)² and p_odd = e^{−Q} sinh Q.
    let theta = 0.8;
    let q = (theta * psf().delta_k() / 2.0).powi(2);
    let p = discrete(&Receiver::sliver(), &pair(theta)).prob(Outcome::Odd).unwrap();
    assert!((p - (-q).exp() * q.sinh()).abs() < 1e-14);
}

#[test]
fn fixed_budget_counts_concentrate() {
    let model = spade_pmf(&TwoPointScene::equal(0.0).unwrap(), &psf(), &ModeBasis::hermite_gaussian(0.5, 6).unwrap()).unwrap();
    let n = 200_000;
    let rec = sample_record(&model, &[1.0], n, Budget::FixedN, 17).unwrap();
    assert_eq!(rec.counts.iter().sum::<u64>(), n);
    assert_eq!(rec.emitted, n);
    let law = model.law(&[1.0]).unwrap();
    let law = law.as_discrete().unwrap();
    for (o, &p) in law.outcomes.iter().zip(&law.probs) {
        let f = rec.count(*o) as f64 / n as f64;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((f - p).abs() <= 5.0 * sd + 1e-12, "{o:?}: {f} vs {p}");
    }
}

#[test]
fn poisson_budget_varies_the_photon_number() {
    let model = sliver_pmf(&TwoPointScene::equal(0.0).unwrap(), &psf());
    let emitted: Vec<u64> =
        (0..20).map(|s| sample_record(&model, &[0.5], 1000, Budget::PoissonN, s).unwrap().emitted).collect();
    assert!(emitted.iter().any(|&e| e != 1000));
    let mean = emitted.iter().sum::<u64>() as f64 / emitted.len() as f64;
    assert!((mean - 1000.0).abs() < 5.0 * (1000.0f64 / 20.0).sqrt());
}

#[test]
fn record_line_roundtrip() {
    let model = sliver_pmf(&TwoPointScene::equal(0.0).unwrap(), &psf());
    let rec = sample_record(&model, &[0.5], 500, Budget::FixedN, 3).unwrap();
    assert_eq!(DetectionRecord::from_line(&rec.to_line()).unwrap(), rec);
}

#[test]
fn identity_crosstalk_is_a_no_op() {
    let law = discrete(&Receiver::spade(ModeBasis::hermite_gaussian(0.5, 4).unwrap()), &pair(0.6));
    let dim = law.outcomes.iter().filter(|o| !o.is_discard()).count();
    assert_eq!(apply_crosstalk(&law, &Crosstalk::identity(dim)).unwrap(), law);
}

#[test]
fn crosstalk_leaves_discard_alone() {
    let law = discrete(&Receiver::splice(), &pair(0.6));
    let mixed = apply_crosstalk(&law, &Crosstalk::identity(1)).unwrap();
    assert_eq!(mixed.prob(Outcome::Discard), law.prob(Outcome::Discard));
}

proptest! {
    #[test]
    fn receiver_laws_are_normalized(theta in 0.0f64..3.0, offset in -0.5f64..0.5, eps in 0.0f64..0.5) {
        let basis = ModeBasis::hermite_gaussian(0.5, 30).unwrap();
        let receivers = [
            Receiver::spade(basis.clone()),
            Receiver::spade(basis).with_crosstalk(Crosstalk::symmetric_leak(32, 1, 2, eps).unwrap()),
            Receiver::sliver(),
            Receiver::splice(),
            Receiver::trispade(),
        ];
        for r in receivers {
            let law = discrete(&r.with_offset(offset), &pair(theta));
            prop_assert!((law.total() - 1.0).abs() < 1e-12);
            prop_assert!(law.probs.iter().all(|&p| p >= 0.0));
        }
    }
}
