mod common;

use common::*;
use heralded::circuits::{builtin, run_model, HeraldSelection, RunOptions};
use heralded::fock::{fock_element, FockPattern};
use heralded::gaussian::{GaussianState, Tolerances};
use heralded::linalg::{c, kron, max_abs, CMat, CVec};
use heralded::schur::{schur_from_first_quantized, SPATIAL};
use heralded::sources::SourceModel;
use heralded::tomography::{clip_to_physical, entanglement_of_formation, QubitDensity};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Squeeze(usize, usize, f64),
    Interfere(u64),
    Loss(usize, f64),
}

fn op(l: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..l, 1..l, 0.0..0.9f64).prop_map(move |(a, s, k)| Op::Squeeze(a, (a + s) % l, k)),
        any::<u64>().prop_map(Op::Interfere),
        (0..l, 0.0..=1.0f64).prop_map(|(m, e)| Op::Loss(m, e)),
    ]
}

fn apply(s: &GaussianState, o: &Op) -> GaussianState {
    let l = s.num_modes();
    match *o {
        Op::Squeeze(a, b, k) => s.two_mode_squeeze(a, b, k).unwrap(),
        Op::Interfere(seed) => s.interfere(&random_unitary(&mut rng(seed), l), &(0..l).collect::<Vec<_>>()).unwrap(),
        Op::Loss(m, e) => s.loss_channel(m, e).unwrap(),
    }
}

fn random_state(seed: u64, l: usize) -> GaussianState {
    let mut r = rng(seed);
    let mut s = GaussianState::vacuum(l).unwrap();
    for a in (0..l).step_by(2) {
        if a + 1 < l {
            s = s.two_mode_squeeze(a, a + 1, 0.2 + 0.5 * rand::Rng::random::<f64>(&mut r)).unwrap();
        }
    }
    s.interfere(&random_unitary(&mut r, l), &(0..l).collect::<Vec<_>>()).unwrap()
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

fn random_density(seed: u64, n: usize, rank: usize) -> CMat {
    let mut r = rng(seed);
    let g = random_complex_matrix(&mut r, n, rank);
    let m = &g * g.adjoint();
    let t = m.trace();
    m.unscale(t.re)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariants_hold_after_every_transform(ops in prop::collection::vec(op(4), 1..8)) {
        let tol = Tolerances::default();
        let mut s = GaussianState::vacuum(4).unwrap();
        for o in &ops {
            s = apply(&s, o);
            prop_assert!(s.validate(&tol).is_ok(), "{:?}", o);
            prop_assert!(s.is_zero_mean());
        }
    }

    #[test]
    fn loss_composes_multiplicatively(seed in any::<u64>(), e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64, m in 0..4usize) {
        let s = random_state(seed, 4);
        let a = s.loss_channel(m, e1).unwrap().loss_channel(m, e2).unwrap();
        let b = s.loss_channel(m, e1 * e2).unwrap();
        prop_assert!(max_abs(&(a.covariance() - b.covariance())) < 1e-12);
    }

    #[test]
    fn interferometer_is_undone_by_its_inverse(seed in any::<u64>(), useed in any::<u64>()) {
        let s = random_state(seed, 4);
        let u = random_unitary(&mut rng(useed), 4);
        let modes = [0, 1, 2, 3];
        let back = s.interfere(&u, &modes).unwrap().interfere(&u.adjoint(), &modes).unwrap();
        prop_assert!(max_abs(&(back.covariance() - s.covariance())) < 1e-12);
        let t = s.interfere(&u, &modes).unwrap();
        prop_assert!((t.total_mean_photons() - s.total_mean_photons()).abs() < 1e-10);
    }

    #[test]
    fn squeezer_is_symmetric_in_its_modes(k in 0.0..0.95f64, a in 0..3usize, b in 0..3usize) {
        prop_assume!(a != b);
        let v = GaussianState::vacuum(3).unwrap();
        let x = v.two_mode_squeeze(a, b, k).unwrap();
        let y = v.two_mode_squeeze(b, a, k).unwrap();
        prop_assert!(max_abs(&(x.covariance() - y.covariance())) < 1e-15);
    }

    #[test]
    fn fock_elements_are_hermitian(seed in any::<u64>(), i in 0..15usize, j in 0..15usize) {
        let s = random_state(seed, 3).loss_channel(1, 0.6).unwrap();
        let pats = patterns_up_to(3, 2);
        let (m, n) = (&pats[i % pats.len()], &pats[j % pats.len()]);
        let a = fock_element(&s, m, n).unwrap();
        let b = fock_element(&s, n, m).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn clipping_yields_a_state(seed in any::<u64>(), shift in 0.0..0.2f64) {
        let mut m = random_density(seed, 4, 4);
        for k in 0..4 {
            m[(k, k)] -= c(shift * (k as f64 - 1.5), 0.0);
        }
        let (p, _) = clip_to_physical(&m);
        prop_assert!(QubitDensity::new(2, p).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn eof_is_local_unitary_invariant(seed in any::<u64>(), rank in 1..=4usize) {
        let mut r = rng(seed ^ 0x5eed);
        let rho = QubitDensity::new(2, random_density(seed, 4, rank)).unwrap();
        let u = kron(&random_unitary(&mut r, 2), &random_unitary(&mut r, 2));
        let moved = QubitDensity::new(2, hermitian_part(&(&u * &rho.matrix * u.adjoint()))).unwrap();
        let a = entanglement_of_formation(&rho).unwrap();
        let b = entanglement_of_formation(&moved).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn schur_state_ignores_label_rotations(seed in any::<u64>()) {
        let d = 2;
        let dim = SPATIAL * d;
        let mut r = rng(seed);
        // bosonic two-particle density: mixture of symmetrised random vectors
        let mut rho = CMat::zeros(dim * dim, dim * dim);
        for _ in 0..3 {
            let x = random_complex_matrix(&mut r, dim * dim, 1);
            let v = CVec::from_fn(dim * dim, |k, _| {
                let (a, b) = (k / dim, k % dim);
                x[(a * dim + b, 0)] + x[(b * dim + a, 0)]
            });
            let v = v.normalize();
            rho += &v * v.adjoint();
        }
        rho.unscale_mut(3.0);
        let w = random_unitary(&mut r, d);
        let one = kron(&CMat::identity(SPATIAL, SPATIAL), &w);
        let both = kron(&one, &one);
        let moved = &both * &rho * both.adjoint();
        let a = schur_from_first_quantized(&rho, d).unwrap();
        let b = schur_from_first_quantized(&moved, d).unwrap();
        prop_assert!(max_abs(&(a.matrix - b.matrix)) < 1e-9);
    }
}

#[test]
fn reruns_are_bit_identical() {
    let c = builtin("4P8M").unwrap();
    let model = SourceModel::Rs { q: vec![0.8, 0.2] };
    let opts = RunOptions { heralds: HeraldSelection::All, ..RunOptions::default() };
    let a = run_model(&c, &model, &opts).unwrap();
    let b = run_model(&c, &model, &opts).unwrap();
    assert_eq!(a.density.matrix(), b.density.matrix());
    assert_eq!(a.success_probability.to_bits(), b.success_probability.to_bits());
    let basis: Vec<FockPattern> = a.density.basis().to_vec();
    assert_eq!(basis, b.density.basis());
}
