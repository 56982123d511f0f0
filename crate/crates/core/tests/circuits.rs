use heralded::circuits::{
    builtin, builtin_names, dilate, run, run_model, CircuitFile, DilatedCircuit, HeraldSelection, RunOptions,
};
use heralded::linalg::{c, max_abs, CMat, CVec};
use heralded::sources::{enumerate_firings, SourceFiring, SourceModel};
use heralded::tomography::{fidelity, logical_density, postselected_density, QubitDensity};

fn logical(out: &heralded::circuits::RunOutput, n: usize) -> CMat {
    let (m, tr) = logical_density(&out.density, n, out.d).unwrap();
    m.unscale(tr)
}

#[test]
fn ideal_success_probabilities() {
    for (name, p, tol) in [
        ("4P8M", 0.031, 0.005),
        ("4P6M", 0.074, 0.005),
        ("4P5M", 0.11, 0.005),
        ("5P5M", 0.096, 0.005),
        ("6P12M", 3.9e-3, 2e-4),
    ] {
        let c = builtin(name).unwrap();
        let out = run_model(&c, &SourceModel::Ideal, &RunOptions::default()).unwrap();
        assert!((out.success_probability - p).abs() <= tol, "{name}: {}", out.success_probability);
    }
}

#[test]
fn ideal_generators_reach_their_targets() {
    for name in ["4P8M", "4P6M", "4P5M", "5P5M", "6P12M"] {
        let c = builtin(name).unwrap();
        let (rho, _) = postselected_density(&c, &SourceModel::Ideal, &RunOptions::default()).unwrap();
        let f = fidelity(&rho, &c.target.state().unwrap());
        assert!(f > 1.0 - 1e-9, "{name}: F = {f}");
    }
}

#[test]
fn every_4p8m_pattern_is_corrected() {
    let c = builtin("4P8M").unwrap();
    let phi = c.target.state().unwrap();
    for i in 0..c.heralds.len() {
        let o = RunOptions { heralds: HeraldSelection::Indices(vec![i]), ..RunOptions::default() };
        let (rho, p) = postselected_density(&c, &SourceModel::Ideal, &o).unwrap();
        assert!(fidelity(&rho, &phi) > 1.0 - 1e-9, "pattern {i}");
        assert!(p > 0.0);
    }
}

#[test]
fn uncorrected_patterns_differ_by_local_unitaries() {
    let c = builtin("4P8M").unwrap();
    let o = RunOptions { apply_corrections: false, heralds: HeraldSelection::Indices(vec![1]), ..RunOptions::default() };
    let (rho, _) = postselected_density(&c, &SourceModel::Ideal, &o).unwrap();
    // still maximally entangled
    assert!((heralded::tomography::concurrence(&rho).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn fused_pair_gives_bell_state_on_every_outcome() {
    let c = builtin("8P16M").unwrap();
    let phi = c.target.state().unwrap();
    let mut total = 0.0;
    for i in 0..c.heralds.len() {
        let o = RunOptions { heralds: HeraldSelection::Indices(vec![i]), ..RunOptions::default() };
        let (rho, p) = postselected_density(&c, &SourceModel::Ideal, &o).unwrap();
        assert!(fidelity(&rho, &phi) > 1.0 - 1e-9, "outcome {i}");
        total += p;
    }
    let (_, fixed) = postselected_density(&c, &SourceModel::Ideal, &RunOptions::default()).unwrap();
    assert!((fixed - 1.2e-4).abs() < 1e-5, "{fixed}");
    assert!(total > fixed);
}

#[test]
fn teleportation_is_perfect_with_ideal_photons() {
    let t = builtin("TELEPORT").unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(c(1.0, 0.0), c(0.0, 0.0)), (c(h, 0.0), c(0.0, h)), (c(0.6, 0.0), c(0.0, -0.8))] {
        let u = CMat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]);
        let spec = t.with_preparation(&u, &[0, 1]);
        let psi = CVec::from_vec(vec![a, b]);
        for i in 0..spec.heralds.len() {
            let o = RunOptions { heralds: HeraldSelection::Indices(vec![i]), ..RunOptions::default() };
            let (rho, _) = postselected_density(&spec, &SourceModel::Ideal, &o).unwrap();
            assert!(fidelity(&rho, &psi) > 1.0 - 1e-9);
        }
    }
}

#[test]
fn bsa_succeeds_half_the_time_on_average() {
    let bsa = builtin("BSA").unwrap();
    let mut mean = 0.0;
    for inputs in [[0, 2], [0, 3], [1, 2], [1, 3]] {
        let spec = bsa.with_inputs(inputs.to_vec());
        let o = RunOptions { heralds: HeraldSelection::All, ..RunOptions::default() };
        mean += run_model(&spec, &SourceModel::Ideal, &o).unwrap().success_probability / 4.0;
    }
    assert!((mean - 0.5).abs() < 1e-9, "{mean}");
}

#[test]
fn dft_circuit_has_flat_modulus() {
    let c = builtin("5P5M").unwrap();
    for z in c.unitary.iter() {
        assert!((z.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-14);
    }
}

#[test]
fn circuit_files_round_trip() {
    for name in builtin_names() {
        let spec = builtin(name).unwrap();
        let text = CircuitFile::from_spec(&spec).to_toml().unwrap();
        let back = CircuitFile::parse(&text).unwrap().to_spec().unwrap();
        assert_eq!(back.name, spec.name);
        assert_eq!(back.inputs, spec.inputs);
        assert_eq!(back.herald_modes, spec.herald_modes);
        assert_eq!(back.logical_pairs, spec.logical_pairs);
        assert_eq!(back.heralds.len(), spec.heralds.len());
        assert!(max_abs(&(back.unitary - &spec.unitary)) < 1e-15, "{name}");
        for (a, b) in back.heralds.iter().zip(&spec.heralds) {
            assert_eq!(a.pattern, b.pattern);
            for (x, y) in a.correction.iter().zip(&b.correction) {
                assert!(max_abs(&(x - y)) < 1e-15);
            }
        }
    }
}

#[test]
fn malformed_circuits_are_rejected() {
    let mut spec = builtin("4P8M").unwrap();
    spec.unitary[(0, 0)] += c(0.1, 0.0);
    assert!(spec.validate().is_err());
    let mut spec = builtin("4P8M").unwrap();
    spec.heralds[0].pattern.push(0);
    assert!(spec.validate().is_err());
    assert!(builtin("7P7M").is_err());
}

#[test]
fn ideal_dilation_is_the_base_circuit() {
    let c = builtin("4P8M").unwrap();
    let dc = dilate(&c, &SourceModel::Ideal, None).unwrap();
    assert_eq!(dc.d, 1);
    assert!(max_abs(&(dc.composite_unitary() - &c.unitary)) < 1e-15);
}

#[test]
fn obb_at_unit_visibility_matches_ideal() {
    let c = builtin("4P8M").unwrap();
    let opts = RunOptions::default();
    let ideal = run_model(&c, &SourceModel::Ideal, &opts).unwrap();
    let obb = run_model(&c, &SourceModel::Obb { visibility: 1.0 }, &opts).unwrap();
    assert!(max_abs(&(logical(&ideal, 2) - logical(&obb, 2))) < 1e-10);
    assert!((ideal.success_probability - obb.success_probability).abs() < 1e-10);
}

#[test]
fn single_label_firing_matches_ideal() {
    let c = builtin("4P8M").unwrap();
    let opts = RunOptions::default();
    let model = SourceModel::Rs { q: vec![0.7, 0.3] };
    let firing = SourceFiring { assignment: vec![0; 4], weight: 0.7f64.powi(4) };
    let dc = dilate(&c, &model, Some(&firing)).unwrap();
    let rs = run(&dc, &opts).unwrap();
    let ideal = run_model(&c, &SourceModel::Ideal, &opts).unwrap();
    assert!(max_abs(&(logical(&rs, 2) - logical(&ideal, 2))) < 1e-10);
}

#[test]
fn firing_filter_matches_unfiltered_heralds() {
    let c = builtin("4P8M").unwrap();
    let opts = RunOptions { heralds: HeraldSelection::All, ..RunOptions::default() };
    let model = SourceModel::Rs { q: vec![0.7, 0.3] };
    let firing = enumerate_firings(&[0.7, 0.3], 4, 100).unwrap()[1].clone();
    assert_eq!(firing.assignment, vec![0, 0, 0, 1]);
    let dc = dilate(&c, &model, Some(&firing)).unwrap();
    let unfiltered = DilatedCircuit { firing: None, ..dc.clone() };
    let a = run(&dc, &opts).unwrap();
    let b = run(&unfiltered, &opts).unwrap();
    assert!(max_abs(&(a.density.unnormalized() - b.density.unnormalized())) < 1e-10);
    assert!((a.herald_probability - b.herald_probability).abs() < 1e-10 * a.herald_probability.max(1e-300));
}

#[test]
fn distinguishable_photons_degrade_the_bell_pair() {
    let c = builtin("4P8M").unwrap();
    let (rho, _) = postselected_density(&c, &SourceModel::Obb { visibility: 0.0 }, &RunOptions::default()).unwrap();
    let f = fidelity(&rho, &c.target.state().unwrap());
    assert!((f - 0.25).abs() < 1e-9, "{f}");
    let mm = QubitDensity::maximally_mixed(2);
    assert!(fidelity(&mm, &c.target.state().unwrap()) - 0.25 < 1e-15);
}
