//! Postselected logical-qubit reconstruction from Pauli expectation values,
//! and state-quality metrics.

use crate::circuits::{run_model, threshold_outcomes_model, CircuitSpec, Detector, OutputKind, RunOptions, MIN_SUCCESS};
use crate::error::{invalid, Error, Result};
use crate::fock::FockDensity;
use crate::linalg::{c, hermitian_eigen, hermiticity_deviation, kron, trace, CMat, CVec, ONE, ZERO};
use crate::sources::SourceModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Clipping larger than this is flagged on the reconstruction.
pub const CLIP_WARNING: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct QubitDensity {
    pub n_qubits: usize,
    pub matrix: CMat,
}

impl QubitDensity {
    pub fn new(n_qubits: usize, matrix: CMat) -> Result<Self> {
        let d = QubitDensity { n_qubits, matrix };
        d.validate()?;
        Ok(d)
    }

    pub fn from_pure(n_qubits: usize, v: &CVec) -> Result<Self> {
        let v = v.normalize();
        QubitDensity::new(n_qubits, &v * v.adjoint())
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        QubitDensity { n_qubits, matrix: CMat::identity(dim, dim).unscale(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return invalid(format!("{} qubits need a {dim}x{dim} matrix", self.n_qubits));
        }
        if hermiticity_deviation(&self.matrix) > 1e-10 {
            return invalid("density is not Hermitian");
        }
        let tr = trace(&self.matrix).re;
        if (tr - 1.0).abs() > 1e-10 {
            return invalid(format!("density trace {tr}"));
        }
        let min = hermitian_eigen(&self.matrix).0[0];
        if min < -1e-9 {
            return invalid(format!("density eigenvalue {min:.3e}"));
        }
        Ok(())
    }

    /// Pauli coefficients `r_G = Tr(rho G)` in base-4 order (I, X, Y, Z per qubit, qubit 0 most significant).
    pub fn pauli_coefficients(&self) -> Vec<f64> {
        pauli_strings(self.n_qubits).iter().map(|g| trace(&(&self.matrix * pauli_string_matrix(g))).re).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMat {
        let i = c(0.0, 1.0);
        match self {
            Pauli::I => CMat::identity(2, 2),
            Pauli::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMat::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            Pauli::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

pub fn pauli_strings(n: usize) -> Vec<Vec<Pauli>> {
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..4usize.pow(n as u32))
        .map(|k| (0..n).map(|q| all[(k / 4usize.pow((n - 1 - q) as u32)) % 4]).collect())
        .collect()
}

pub fn pauli_string_matrix(g: &[Pauli]) -> CMat {
    g.iter().fold(CMat::identity(1, 1), |acc, p| kron(&acc, &p.matrix()))
}

/// Rotation taking the eigenbasis of `p` to the computational basis, so that
/// `U^dagger Z U = p`.
pub fn measurement_rotation(p: Pauli) -> CMat {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let hadamard = CMat::from_row_slice(2, 2, &[h, h, h, -h]);
    match p {
        Pauli::I | Pauli::Z => CMat::identity(2, 2),
        Pauli::X => hadamard,
        Pauli::Y => {
            let s_dag = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(0.0, -1.0)]);
            hadamard * s_dag
        }
    }
}

pub fn measurement_setting(labels: &[Pauli]) -> Vec<CMat> {
    labels.iter().map(|&p| measurement_rotation(p)).collect()
}

/// Qubit value and internal label of each photon in a one-per-pair pattern
/// over `(pair, rail, label)` positions; `None` otherwise.
fn decode(p: &[usize], n_qubits: usize, d: usize) -> Option<(usize, Vec<usize>)> {
    let mut bits = 0;
    let mut labels = Vec::with_capacity(n_qubits);
    for q in 0..n_qubits {
        let group = &p[2 * q * d..2 * (q + 1) * d];
        if group.iter().sum::<usize>() != 1 {
            return None;
        }
        let k = group.iter().position(|&x| x == 1)?;
        bits = bits << 1 | k / d;
        labels.push(k % d);
    }
    Some((bits, labels))
}

/// Logical density from a Fock density over `(pair, rail, label)` positions:
/// keeps one-photon-per-pair patterns and traces the internal labels.
/// Returns the unnormalised matrix and its trace (the postselected fraction).
pub fn logical_density(dens: &FockDensity, n_qubits: usize, d: usize) -> Result<(CMat, f64)> {
    if dens.modes.len() != 2 * n_qubits * d {
        return invalid("density does not cover the logical positions");
    }
    let dim = 1 << n_qubits;
    let decoded: Vec<Option<(usize, Vec<usize>)>> = dens.basis().iter().map(|p| decode(&p.0, n_qubits, d)).collect();
    let mut m = CMat::zeros(dim, dim);
    for (i, di) in decoded.iter().enumerate() {
        let Some((bi, li)) = di else { continue };
        for (j, dj) in decoded.iter().enumerate() {
            let Some((bj, lj)) = dj else { continue };
            if li == lj {
                m[(*bi, *bj)] += dens.matrix()[(i, j)];
            }
        }
    }
    let tr = trace(&m).re;
    Ok((m, tr))
}

/// Density from Pauli coefficients in `pauli_strings` order.
pub fn from_expectations(n: usize, r: &[f64]) -> CMat {
    let dim = 1 << n;
    let mut m = CMat::zeros(dim, dim);
    for (g, &x) in pauli_strings(n).iter().zip(r) {
        m += pauli_string_matrix(g).scale(x);
    }
    m.unscale(dim as f64)
}

/// Nearest positive unit-trace matrix by eigenvalue clipping; returns the
/// matrix and the clipped negative weight.
pub fn clip_to_physical(m: &CMat) -> (CMat, f64) {
    let herm = (m + m.adjoint()).scale(0.5);
    let (vals, vecs) = hermitian_eigen(&herm);
    let neg: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    if neg == 0.0 {
        let tr = trace(&herm).re;
        return (herm.unscale(tr), 0.0);
    }
    let kept: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for (k, &v) in kept.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(k);
            out += (&col * col.adjoint()).scale(v / total);
        }
    }
    (out, neg)
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub density: QubitDensity,
    pub coefficients: Vec<f64>,
    /// Negative eigenvalue weight removed by clipping.
    pub clipped: f64,
    pub warning: bool,
    /// Postselected success probability (Z setting).
    pub success_probability: f64,
}

/// Outcome probabilities of one measurement setting, postselected on one
/// photon per pair (one click per pair for threshold detection) and summed
/// over internal labels. Also returns the rate-normalised success probability.
pub fn setting_probabilities(
    circuit: &CircuitSpec,
    model: &SourceModel,
    opts: &RunOptions,
    setting: &[Pauli],
) -> Result<(Vec<f64>, f64)> {
    let n = circuit.n_qubits();
    let opts = RunOptions { rotations: Some(measurement_setting(setting)), output: OutputKind::Logical, ..opts.clone() };
    if opts.detector == Detector::Threshold {
        let p = threshold_outcomes_model(circuit, model, &opts)?;
        let total: f64 = p.iter().sum();
        if total < MIN_SUCCESS {
            return Err(Error::Numerical("zero postselection probability".into()));
        }
        return Ok((p.iter().map(|x| x / total).collect(), total));
    }
    let out = run_model(circuit, model, &opts)?;
    if out.density.is_empty() {
        return Err(Error::Numerical("zero postselection probability".into()));
    }
    let (m, tr) = logical_density(&out.density, n, out.d)?;
    Ok(((0..1 << n).map(|i| m[(i, i)].re / tr).collect(), out.success_probability))
}

/// Linear-inversion tomography over all `3^n` Pauli settings.
pub fn reconstruct(circuit: &CircuitSpec, model: &SourceModel, opts: &RunOptions) -> Result<Reconstruction> {
    let n = circuit.n_qubits();
    if n == 0 {
        return invalid(format!("{} has no logical qubits", circuit.name));
    }
    let bases = [Pauli::X, Pauli::Y, Pauli::Z];
    let settings: Vec<Vec<Pauli>> = (0..3usize.pow(n as u32))
        .map(|k| (0..n).map(|q| bases[(k / 3usize.pow((n - 1 - q) as u32)) % 3]).collect())
        .collect();
    let results: Vec<Result<(Vec<f64>, f64)>> =
        settings.par_iter().map(|s| setting_probabilities(circuit, model, opts, s)).collect();
    let mut probs = Vec::with_capacity(results.len());
    for r in results {
        probs.push(r?);
    }
    let success_probability = probs.last().map_or(0.0, |p| p.1);
    let strings = pauli_strings(n);
    let coefficients: Vec<f64> = strings
        .iter()
        .map(|g| {
            let setting: Vec<Pauli> = g.iter().map(|&p| if p == Pauli::I { Pauli::Z } else { p }).collect();
            let idx = settings.iter().position(|s| *s == setting).expect("setting exists");
            probs[idx]
                .0
                .iter()
                .enumerate()
                .map(|(bits, p)| {
                    let sign = g
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x != Pauli::I)
                        .fold(1.0, |s, (q, _)| if bits >> (n - 1 - q) & 1 == 1 { -s } else { s });
                    sign * p
                })
                .sum()
        })
        .collect();
    let (matrix, clipped) = clip_to_physical(&from_expectations(n, &coefficients));
    Ok(Reconstruction {
        density: QubitDensity { n_qubits: n, matrix },
        coefficients,
        clipped,
        warning: clipped > CLIP_WARNING,
        success_probability,
    })
}

/// Postselected logical state read directly from the heralded Fock density
/// (no measurement settings); equal to `reconstruct` for PNRD runs.
pub fn postselected_density(circuit: &CircuitSpec, model: &SourceModel, opts: &RunOptions) -> Result<(QubitDensity, f64)> {
    let n = circuit.n_qubits();
    if n == 0 {
        return invalid(format!("{} has no logical qubits", circuit.name));
    }
    let opts = RunOptions { output: OutputKind::Logical, rotations: None, ..opts.clone() };
    let out = run_model(circuit, model, &opts)?;
    if out.density.is_empty() {
        return Err(Error::Numerical("zero postselection probability".into()));
    }
    let (m, tr) = logical_density(&out.density, n, out.d)?;
    let (matrix, _) = clip_to_physical(&m.unscale(tr));
    Ok((QubitDensity { n_qubits: n, matrix }, out.success_probability))
}

/// `<t|rho|t>` for a pure target.
pub fn fidelity(rho: &QubitDensity, target: &CVec) -> f64 {
    let t = target.normalize();
    (t.adjoint() * &rho.matrix * &t)[(0, 0)].re.clamp(0.0, 1.0)
}

/// Wootters concurrence. The spin-flip roots are the singular values of
/// `tau_ij = w_i^T (Y x Y) w_j` with `w_i = sqrt(l_i) e_i` over the support of `rho`.
pub fn concurrence(rho: &QubitDensity) -> Result<f64> {
    if rho.n_qubits != 2 {
        return invalid("concurrence needs two qubits");
    }
    let yy = kron(&Pauli::Y.matrix(), &Pauli::Y.matrix());
    let (vals, vecs) = hermitian_eigen(&rho.matrix);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let w: Vec<CVec> = (0..vals.len())
        .filter(|&k| vals[k] > 1e-14 * top)
        .map(|k| vecs.column(k).scale(vals[k].sqrt()))
        .collect();
    let tau = CMat::from_fn(w.len(), w.len(), |i, j| (w[i].transpose() * &yy * &w[j])[(0, 0)]);
    let mut lam: Vec<f64> = tau.singular_values().iter().copied().collect();
    lam.resize(4, 0.0);
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

pub fn entanglement_of_formation(rho: &QubitDensity) -> Result<f64> {
    let cc = concurrence(rho)?.min(1.0);
    Ok(binary_entropy((1.0 + (1.0 - cc * cc).sqrt()) / 2.0))
}

/// Entropy of entanglement of a pure two-qubit state.
pub fn pure_state_entanglement(v: &CVec) -> f64 {
    let v = v.normalize();
    let m = CMat::from_fn(2, 2, |i, j| v[2 * i + j]);
    let rho_a = &m * m.adjoint();
    hermitian_eigen(&rho_a).0.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> CVec {
        crate::circuits::Target::Bell.state().unwrap()
    }

    #[test]
    fn rotations_diagonalise_paulis() {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let u = measurement_rotation(p);
            let back = u.adjoint() * Pauli::Z.matrix() * &u;
            assert!((back - p.matrix()).norm() < 1e-12);
        }
        let h = measurement_rotation(Pauli::X);
        assert!((&h * &h - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn bell_correlators() {
        let rho = QubitDensity::from_pure(2, &bell()).unwrap();
        let ex = |a, b| trace(&(&rho.matrix * pauli_string_matrix(&[a, b]))).re;
        assert!((ex(Pauli::X, Pauli::X) - 1.0).abs() < 1e-12);
        assert!((ex(Pauli::Z, Pauli::Z) - 1.0).abs() < 1e-12);
        assert!((ex(Pauli::Y, Pauli::Y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectations_round_trip() {
        let rho = QubitDensity::from_pure(2, &bell()).unwrap();
        let back = from_expectations(2, &rho.pauli_coefficients());
        assert!((back - &rho.matrix).norm() < 1e-12);
    }

    #[test]
    fn fidelity_limits() {
        let rho = QubitDensity::from_pure(2, &bell()).unwrap();
        assert!((fidelity(&rho, &bell()) - 1.0).abs() < 1e-12);
        assert!((fidelity(&QubitDensity::maximally_mixed(2), &bell()) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn eof_limits() {
        let rho = QubitDensity::from_pure(2, &bell()).unwrap();
        assert!((entanglement_of_formation(&rho).unwrap() - 1.0).abs() < 1e-9);
        assert!(entanglement_of_formation(&QubitDensity::maximally_mixed(2)).unwrap().abs() < 1e-12);
        let mut prod = CVec::zeros(4);
        prod[1] = ONE;
        let rho = QubitDensity::from_pure(2, &prod).unwrap();
        assert!(entanglement_of_formation(&rho).unwrap().abs() < 1e-9);
    }

    #[test]
    fn clipping_restores_positivity() {
        let mut m = QubitDensity::from_pure(2, &bell()).unwrap().matrix;
        m[(1, 1)] -= c(0.01, 0.0);
        m[(2, 2)] += c(0.01, 0.0);
        m[(0, 0)] -= c(0.02, 0.0);
        m[(3, 3)] += c(0.02, 0.0);
        let (fixed, neg) = clip_to_physical(&m);
        assert!(neg > 0.0);
        assert!(QubitDensity::new(2, fixed).is_ok());
    }
}
