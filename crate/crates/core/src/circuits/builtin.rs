use super::file::load;
use super::{identity2, pauli_x, pauli_z, CircuitSpec, HeraldPattern, Target};
use crate::error::{Error, Result};
use crate::linalg::{beamsplitter, dft, embed, CMat};

const FILE_4P8M: &str = include_str!("../../circuits/4p8m.toml");
const FILE_4P6M: &str = include_str!("../../circuits/4p6m.toml");
const FILE_4P5M: &str = include_str!("../../circuits/4p5m.toml");
const FILE_6P12M: &str = include_str!("../../circuits/6p12m.toml");

pub fn builtin_names() -> &'static [&'static str] {
    &["4P8M", "4P6M", "4P5M", "5P5M", "6P12M", "BSA", "TypeII", "8P16M", "TELEPORT"]
}

pub fn builtin(name: &str) -> Result<CircuitSpec> {
    let spec = match name {
        "4P8M" => load(FILE_4P8M)?,
        "4P6M" => load(FILE_4P6M)?,
        "4P5M" => load(FILE_4P5M)?,
        "6P12M" => load(FILE_6P12M)?,
        "5P5M" => five_photon_dft(),
        "BSA" => bsa("BSA"),
        "TypeII" => bsa("TypeII"),
        "8P16M" => fused_pair()?,
        "TELEPORT" => teleport()?,
        _ => return Err(Error::Invalid(format!("unknown circuit {name}"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// Five photons through a 5-mode DFT; three photons in output 0 herald a
/// Bell pair on (1,2) and (4,3).
fn five_photon_dft() -> CircuitSpec {
    CircuitSpec {
        name: "5P5M".into(),
        modes: 5,
        inputs: (0..5).collect(),
        unitary: dft(5),
        herald_modes: vec![0],
        heralds: vec![HeraldPattern { pattern: vec![3], correction: vec![identity2(), identity2()] }],
        logical_pairs: vec![(1, 2), (4, 3)],
        target: Target::Bell,
    }
}

/// Which Bell state a BSA coincidence pattern on (a0, a1, b0, b1) identifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellOutcome {
    PsiPlus,
    PsiMinus,
}

/// Classifies a BSA detection pattern; `None` for rejected patterns.
pub fn bsa_pattern_kind(p: &[usize]) -> Option<BellOutcome> {
    match p {
        [1, 1, 0, 0] | [0, 0, 1, 1] => Some(BellOutcome::PsiPlus),
        [1, 0, 0, 1] | [0, 1, 1, 0] => Some(BellOutcome::PsiMinus),
        _ => None,
    }
}

const BSA_PATTERNS: [[usize; 4]; 4] = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 0, 1], [0, 1, 1, 0]];

/// Partial Bell-state analyser on qubits (0,1) and (2,3): beamsplitters on
/// (0,2) and (1,3).
fn bsa_unitary() -> CMat {
    let bs = beamsplitter();
    embed(&bs, 4, &[1, 3]) * embed(&bs, 4, &[0, 2])
}

fn bsa(name: &str) -> CircuitSpec {
    CircuitSpec {
        name: name.into(),
        modes: 4,
        inputs: vec![0, 3],
        unitary: bsa_unitary(),
        herald_modes: vec![0, 1, 2, 3],
        heralds: BSA_PATTERNS.iter().map(|p| HeraldPattern { pattern: p.to_vec(), correction: vec![] }).collect(),
        logical_pairs: vec![],
        target: Target::None,
    }
}

/// Correction on the surviving qubit after a BSA outcome on `Phi+` resources.
fn bsa_correction(p: &[usize]) -> CMat {
    match bsa_pattern_kind(p) {
        Some(BellOutcome::PsiPlus) => pauli_x(),
        _ => pauli_z() * pauli_x(),
    }
}

/// 4P8M with the fixed-pattern correction folded into its unitary.
fn corrected_hbsg() -> Result<(CircuitSpec, CMat)> {
    let base = load(FILE_4P8M)?;
    let h = &base.heralds[0];
    let mut corr = CMat::identity(base.modes, base.modes);
    for (q, &(a, b)) in base.logical_pairs.iter().enumerate() {
        corr = embed(&h.correction[q], base.modes, &[a, b]) * corr;
    }
    let u = &corr * &base.unitary;
    Ok((base, u))
}

/// Two 4P8M generators (modes 0..8 and 8..16) fused by a BSA on qubits
/// (2,3) and (8,9); the output pairs are (0,1) and (10,11).
fn fused_pair() -> Result<CircuitSpec> {
    let (base, u) = corrected_hbsg()?;
    let n = 16;
    let first: Vec<usize> = (0..8).collect();
    let second: Vec<usize> = (8..16).collect();
    let blocks = embed(&u, n, &second) * embed(&u, n, &first);
    let bs = beamsplitter();
    let fusion = embed(&bs, n, &[3, 9]) * embed(&bs, n, &[2, 8]);
    let fixed = &base.heralds[0].pattern;
    let heralds = BSA_PATTERNS
        .iter()
        .map(|p| {
            let pattern = p.iter().chain(fixed).chain(fixed).copied().collect();
            HeraldPattern { pattern, correction: vec![identity2(), bsa_correction(p)] }
        })
        .collect();
    Ok(CircuitSpec {
        name: "8P16M".into(),
        modes: n,
        inputs: vec![0, 1, 2, 3, 8, 9, 10, 11],
        unitary: fusion * blocks,
        herald_modes: vec![2, 3, 8, 9, 4, 5, 6, 7, 12, 13, 14, 15],
        heralds,
        logical_pairs: vec![(0, 1), (10, 11)],
        target: Target::Bell,
    })
}

/// Input qubit on (0,1) (photon in mode 0; a preparation unitary is added by
/// the caller), 4P8M on modes 2..10, BSA on (0,1)+(2,3), output on (4,5).
fn teleport() -> Result<CircuitSpec> {
    let (base, u) = corrected_hbsg()?;
    let n = 10;
    let block: Vec<usize> = (2..10).collect();
    let bs = beamsplitter();
    let bsa = embed(&bs, n, &[1, 3]) * embed(&bs, n, &[0, 2]);
    let fixed = &base.heralds[0].pattern;
    let heralds = BSA_PATTERNS
        .iter()
        .map(|p| {
            let pattern = p.iter().chain(fixed).copied().collect();
            HeraldPattern { pattern, correction: vec![bsa_correction(p)] }
        })
        .collect();
    Ok(CircuitSpec {
        name: "TELEPORT".into(),
        modes: n,
        inputs: vec![0, 2, 3, 4, 5],
        unitary: bsa * embed(&u, n, &block),
        herald_modes: vec![0, 1, 2, 3, 6, 7, 8, 9],
        heralds,
        logical_pairs: vec![(4, 5)],
        target: Target::None,
    })
}
