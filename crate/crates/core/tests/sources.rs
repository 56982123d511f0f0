use heralded::fock::FockPattern;
use heralded::linalg::{c, CMat};
use heralded::sources::{
    enumerate_firings, filter_heralds, obb_distinguishability_unitary, obb_internal_state, rs_purity, schmidt_from_jsa,
    JsaGrid, JsaParams, SourceFiring,
};

#[test]
fn purity_values() {
    assert_eq!(rs_purity(&[1.0]).unwrap(), 1.0);
    assert!((rs_purity(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
    assert!((rs_purity(&[0.8, 0.2]).unwrap() - 0.68).abs() < 1e-15);
}

#[test]
fn firing_counts_and_weights() {
    assert_eq!(enumerate_firings(&[1.0], 4, 100).unwrap().len(), 1);
    assert_eq!(enumerate_firings(&[0.6, 0.4], 4, 100).unwrap().len(), 16);
    let f = enumerate_firings(&[0.6, 0.4], 8, 1000).unwrap();
    assert_eq!(f.len(), 256);
    assert!((f.iter().map(|x| x.weight).sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(enumerate_firings(&[0.6, 0.4], 8, 255).is_err());
}

#[test]
fn filter_respects_firing_counts() {
    let pats = vec![FockPattern(vec![1, 0, 1, 0]), FockPattern(vec![1, 0, 0, 1]), FockPattern(vec![0, 2, 0, 0])];
    let label_of = [0, 1, 0, 1];
    let single = SourceFiring { assignment: vec![0, 0], weight: 1.0 };
    assert_eq!(filter_heralds(&single, 1, &[0, 0, 0, 0], &pats).len(), 3);
    let zeros = SourceFiring { assignment: vec![0, 0, 0, 0], weight: 1.0 };
    let kept = filter_heralds(&zeros, 2, &label_of, &pats);
    assert_eq!(kept, vec![FockPattern(vec![1, 0, 1, 0])]);
}

#[test]
fn obb_rotation_limits() {
    let n = 3;
    let u = obb_distinguishability_unitary(2, 1.0, n).unwrap();
    assert!((u - CMat::identity(n, n)).norm() < 1e-15);
    let u = obb_distinguishability_unitary(2, 0.0, n).unwrap();
    assert!(u[(0, 0)].norm() < 1e-15);
    assert!((u[(2, 0)].norm() - 1.0).abs() < 1e-15);
    assert!((u[(0, 2)].norm() - 1.0).abs() < 1e-15);
    assert!((u[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn obb_pairwise_visibility() {
    for v in [0.0, 0.3, 0.81, 1.0] {
        let a = obb_internal_state(1, v, 4).unwrap();
        let b = obb_internal_state(3, v, 4).unwrap();
        let overlap = a.dotc(&b).norm();
        assert!((overlap - v.sqrt()).abs() < 1e-14);
        assert!((overlap * overlap - v).abs() < 1e-14);
    }
}

#[test]
fn separable_jsa_has_one_mode() {
    let n = 40;
    let f: Vec<f64> = (0..n).map(|i| (-(i as f64 - 20.0).powi(2) / 50.0).exp()).collect();
    let g: Vec<f64> = (0..n).map(|i| (-(i as f64 - 15.0).powi(2) / 30.0).exp()).collect();
    let amp = CMat::from_fn(n, n, |i, j| c(f[i] * g[j], 0.0));
    let t = schmidt_from_jsa(&JsaGrid::from_amplitude(amp).unwrap(), 0.005).unwrap();
    assert_eq!(t.k_trunc, 1);
    assert!((t.fidelity - 1.0).abs() < 1e-10);
}

#[test]
fn truncation_fidelity_grows_as_threshold_drops() {
    let jsa = JsaGrid::model(&JsaParams { filter_width: 400.0, ..JsaParams::default() }).unwrap();
    let mut last = 0.0;
    for eps in [0.3, 0.1, 0.05, 0.01, 0.005, 0.001] {
        let t = schmidt_from_jsa(&jsa, eps).unwrap();
        assert!(t.fidelity >= last - 1e-12, "eps {eps}");
        last = t.fidelity;
    }
}

#[test]
fn few_modes_over_the_filter_range() {
    for w in [150.0, 200.0, 250.0, 300.0, 350.0, 400.0] {
        let jsa = JsaGrid::model(&JsaParams { filter_width: w, ..JsaParams::default() }).unwrap();
        let t = schmidt_from_jsa(&jsa, 0.005).unwrap();
        assert!(t.k_trunc <= 4, "{w}: {}", t.k_trunc);
    }
}
