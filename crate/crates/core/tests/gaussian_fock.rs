use heralded::fock::{fock_element, herald, FockPattern};
use heralded::gaussian::{GaussianState, Tolerances};
use heralded::linalg::beamsplitter;

fn p(v: &[usize]) -> FockPattern {
    FockPattern(v.to_vec())
}

#[test]
fn vacuum_has_unit_norm_element() {
    let v = GaussianState::vacuum(2).unwrap();
    let z = fock_element(&v, &p(&[0, 0]), &p(&[0, 0])).unwrap();
    assert!((z.re - 1.0).abs() < 1e-15 && z.im.abs() < 1e-15);
}

#[test]
fn two_mode_squeezed_pair_element() {
    for k in [0.1, 0.2, 0.5] {
        let s = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, k).unwrap();
        let z = fock_element(&s, &p(&[1, 1]), &p(&[1, 1])).unwrap();
        assert!((z.re - (1.0 - k * k) * k * k).abs() < 1e-14, "{k}");
        let coh = fock_element(&s, &p(&[1, 1]), &p(&[0, 0])).unwrap();
        assert!((coh.norm() - (1.0 - k * k) * k).abs() < 1e-14);
        assert!((coh - fock_element(&s, &p(&[0, 0]), &p(&[1, 1])).unwrap().conj()).norm() < 1e-15);
    }
}

#[test]
fn single_photon_herald_from_squeezer() {
    let k = 0.2f64;
    let s = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, k).unwrap();
    let d = herald(&s, &[0], &p(&[1]), &[1], 3).unwrap();
    assert!((d.herald_probability - 0.0384).abs() < 1e-14);
    assert!((d.get(&p(&[1]), &p(&[1])).re - 1.0).abs() < 1e-12);
    assert!((d.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn vacuum_herald_on_vacuum() {
    let v = GaussianState::vacuum(3).unwrap();
    let d = herald(&v, &[0, 1], &p(&[0, 0]), &[2], 2).unwrap();
    assert!((d.herald_probability - 1.0).abs() < 1e-15);
    assert!((d.get(&p(&[0]), &p(&[0])).re - 1.0).abs() < 1e-15);
}

#[test]
fn loss_on_herald_arm_roughly_halves_single_clicks() {
    let k = 0.2f64;
    let nbar = k * k / (1.0 - k * k);
    let single = |eta: f64| {
        let s = GaussianState::vacuum(2).unwrap().two_mode_squeeze(0, 1, k).unwrap().loss_channel(0, eta).unwrap();
        herald(&s, &[0], &p(&[1]), &[], 0).unwrap().herald_probability
    };
    for eta in [1.0, 0.5] {
        // the signal marginal is thermal with mean eta * nbar
        let m = eta * nbar;
        assert!((single(eta) - m / (1.0 + m).powi(2)).abs() < 1e-14);
    }
    let ratio = single(0.5) / single(1.0);
    assert!((ratio - 0.5).abs() < 0.03, "{ratio}");
}

#[test]
fn heralded_density_is_hermitian_and_positive() {
    let s = GaussianState::vacuum(4)
        .unwrap()
        .two_mode_squeeze(0, 1, 0.3)
        .unwrap()
        .two_mode_squeeze(2, 3, 0.25)
        .unwrap()
        .interfere(&beamsplitter(), &[1, 2])
        .unwrap()
        .loss_channel(3, 0.7)
        .unwrap();
    s.validate(&Tolerances::default()).unwrap();
    let d = herald(&s, &[0, 3], &p(&[1, 0]), &[1, 2], 2).unwrap();
    assert!(d.hermiticity_deviation() < 1e-12);
    assert!(d.min_eigenvalue() > -1e-12);
}
