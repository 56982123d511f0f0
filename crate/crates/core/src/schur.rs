//! Two-photon first-quantized reconstruction in the symmetric/antisymmetric
//! (Schur-Weyl) basis of two ququarts, with the internal label traced out.
//!
//! Spatial modes are the four rails `(pair, rail)` numbered `1..=4`; the
//! computational states have one photon in `{1,2}` and one in `{3,4}`.

use crate::error::{invalid, Result};
use crate::fock::FockDensity;
use crate::linalg::{c, hermitian_eigen, trace, CMat, CVec, ZERO};
use serde::Serialize;

/// Spatial dimension (two dual-rail qubits).
pub const SPATIAL: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

/// One Schur basis state: `|i,i>` (`i == j`) or `|phi(+/-)_{i,j}>`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SchurLabel {
    pub i: usize,
    pub j: usize,
    pub symmetry: Symmetry,
    pub computational: bool,
}

impl SchurLabel {
    pub fn name(&self) -> String {
        match (self.symmetry, self.i == self.j) {
            (_, true) => format!("|{}{}>", self.i, self.j),
            (Symmetry::Symmetric, false) => format!("phi+_{}{}", self.i, self.j),
            (Symmetry::Antisymmetric, false) => format!("phi-_{}{}", self.i, self.j),
        }
    }

    fn vector(&self) -> CVec {
        let mut v = CVec::zeros(SPATIAL * SPATIAL);
        let (a, b) = (self.i - 1, self.j - 1);
        if a == b {
            v[a * SPATIAL + a] = c(1.0, 0.0);
        } else {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let s = if self.symmetry == Symmetry::Symmetric { h } else { -h };
            v[a * SPATIAL + b] = c(h, 0.0);
            v[b * SPATIAL + a] = c(s, 0.0);
        }
        v
    }
}

/// Symmetric block first, then antisymmetric; each lexicographic in `(i, j)`.
pub fn schur_basis() -> Vec<SchurLabel> {
    let comp = |i: usize, j: usize| i <= 2 && j >= 3;
    let mut out = Vec::with_capacity(16);
    for i in 1..=SPATIAL {
        for j in i..=SPATIAL {
            out.push(SchurLabel { i, j, symmetry: Symmetry::Symmetric, computational: comp(i, j) });
        }
    }
    for i in 1..=SPATIAL {
        for j in i + 1..=SPATIAL {
            out.push(SchurLabel { i, j, symmetry: Symmetry::Antisymmetric, computational: comp(i, j) });
        }
    }
    out
}

/// Normalised symmetrised two-particle vector for single-particle states
/// given as indices into a space of dimension `dim`.
pub fn symmetrize(kets: &[usize], dim: usize) -> Result<CVec> {
    let &[a, b] = kets else {
        return invalid("symmetrisation is implemented for two particles");
    };
    if a >= dim || b >= dim {
        return invalid("single-particle index out of range");
    }
    let mut v = CVec::zeros(dim * dim);
    if a == b {
        v[a * dim + a] = c(1.0, 0.0);
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v[a * dim + b] = c(h, 0.0);
        v[b * dim + a] = c(h, 0.0);
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct SchurState {
    pub matrix: CMat,
    pub labels: Vec<SchurLabel>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SectorPopulations {
    pub computational_symmetric: f64,
    pub computational_antisymmetric: f64,
    pub noncomputational_symmetric: f64,
    pub noncomputational_antisymmetric: f64,
}

impl SectorPopulations {
    pub fn total(&self) -> f64 {
        self.computational_symmetric
            + self.computational_antisymmetric
            + self.noncomputational_symmetric
            + self.noncomputational_antisymmetric
    }

    pub fn antisymmetric(&self) -> f64 {
        self.computational_antisymmetric + self.noncomputational_antisymmetric
    }

    pub fn computational(&self) -> f64 {
        self.computational_symmetric + self.computational_antisymmetric
    }
}

/// Two-particle density over `(position, position)` with position index
/// `spatial * d + label`, from a two-photon Fock density over the same positions.
pub fn first_quantized(dens: &FockDensity) -> Result<CMat> {
    let dim = dens.modes.len();
    // symmetrised vectors have at most two non-zero entries
    let vecs: Vec<Vec<(usize, f64)>> = dens
        .basis()
        .iter()
        .map(|p| {
            if p.total() != 2 {
                return invalid(format!("pattern with {} photons is not supported", p.total()));
            }
            let kets: Vec<usize> = p.0.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
            let v = symmetrize(&kets, dim)?;
            Ok(v.iter().enumerate().filter(|(_, z)| z.re != 0.0).map(|(i, z)| (i, z.re)).collect())
        })
        .collect::<Result<_>>()?;
    let m = dens.matrix();
    let mut out = CMat::zeros(dim * dim, dim * dim);
    for (i, vi) in vecs.iter().enumerate() {
        for (j, vj) in vecs.iter().enumerate() {
            let z = m[(i, j)];
            if z == ZERO {
                continue;
            }
            for &(a, x) in vi {
                for &(b, y) in vj {
                    out[(a, b)] += z * (x * y);
                }
            }
        }
    }
    Ok(out)
}

/// Traces the internal label of both particles and rotates into the Schur basis.
pub fn schur_from_first_quantized(rho: &CMat, d: usize) -> Result<SchurState> {
    let dim = SPATIAL * d;
    if rho.nrows() != dim * dim {
        return invalid(format!("first-quantized density must be {0}x{0}", dim * dim));
    }
    let mut sp = CMat::zeros(SPATIAL * SPATIAL, SPATIAL * SPATIAL);
    for s1 in 0..SPATIAL {
        for s2 in 0..SPATIAL {
            for t1 in 0..SPATIAL {
                for t2 in 0..SPATIAL {
                    let mut acc = ZERO;
                    for k1 in 0..d {
                        for k2 in 0..d {
                            acc += rho[((s1 * d + k1) * dim + s2 * d + k2, (t1 * d + k1) * dim + t2 * d + k2)];
                        }
                    }
                    sp[(s1 * SPATIAL + s2, t1 * SPATIAL + t2)] = acc;
                }
            }
        }
    }
    let labels = schur_basis();
    let b = CMat::from_columns(&labels.iter().map(|l| l.vector()).collect::<Vec<_>>());
    Ok(SchurState { matrix: b.adjoint() * sp * b, labels })
}

/// Schur state from a two-photon Fock density over `4 x d` positions.
pub fn reduce_schur(dens: &FockDensity, d: usize) -> Result<SchurState> {
    if dens.modes.len() != SPATIAL * d {
        return invalid(format!("expected {} positions for d = {d}", SPATIAL * d));
    }
    schur_from_first_quantized(&first_quantized(dens)?, d)
}

/// `|Phi+> = (phi+_13 + phi+_24)/sqrt 2` in the Schur basis.
pub fn phi_plus() -> CVec {
    let labels = schur_basis();
    let mut v = CVec::zeros(labels.len());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (k, l) in labels.iter().enumerate() {
        if l.symmetry == Symmetry::Symmetric && ((l.i, l.j) == (1, 3) || (l.i, l.j) == (2, 4)) {
            v[k] = c(h, 0.0);
        }
    }
    v
}

impl SchurState {
    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.matrix).0[0]
    }

    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }
}

/// Fidelity against `|Phi+>`.
pub fn schur_fidelity(s: &SchurState) -> f64 {
    let v = phi_plus();
    (v.adjoint() * &s.matrix * &v)[(0, 0)].re
}

pub fn leakage_report(s: &SchurState) -> SectorPopulations {
    let mut r = SectorPopulations::default();
    for (k, l) in s.labels.iter().enumerate() {
        let p = s.population(k);
        match (l.computational, l.symmetry) {
            (true, Symmetry::Symmetric) => r.computational_symmetric += p,
            (true, Symmetry::Antisymmetric) => r.computational_antisymmetric += p,
            (false, Symmetry::Symmetric) => r.noncomputational_symmetric += p,
            (false, Symmetry::Antisymmetric) => r.noncomputational_antisymmetric += p,
        }
    }
    r
}

/// Population of one-photon-per-pair patterns in a Fock density over `4 x d` positions.
pub fn fock_computational_population(dens: &FockDensity, d: usize) -> f64 {
    dens.basis()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.0[..2 * d].iter().sum::<usize>() == 1 && p.0[2 * d..].iter().sum::<usize>() == 1)
        .map(|(i, _)| dens.matrix()[(i, i)].re)
        .sum()
}
