//! Interferometer definitions, dilation over internal photon labels, and the
//! squeezer -> loss -> unitary -> herald pipeline.

mod builtin;
mod file;
mod run;

pub use builtin::{builtin, builtin_names, bsa_pattern_kind, BellOutcome};
pub use file::{CircuitFile, FILE_VERSION};
pub use run::{dilate, Detector, DilatedCircuit, HeraldSelection, OutputKind, RunOptions, RunOutput, run, run_model,
    click_probability, threshold_outcomes, threshold_outcomes_model, MAX_CLICK_GROUPS, MIN_SUCCESS};

use crate::error::{invalid, Result};
use crate::gaussian::Tolerances;
use crate::linalg::{c, unitarity_deviation, CMat, CVec, ONE, ZERO};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `|Phi+>` on two qubits.
    Bell,
    /// `(|000> + |111>)/sqrt 2`.
    Ghz3,
    /// No heralded logical output (measurement-only circuits).
    None,
}

impl Target {
    pub fn n_qubits(&self) -> usize {
        match self {
            Target::Bell => 2,
            Target::Ghz3 => 3,
            Target::None => 0,
        }
    }

    pub fn state(&self) -> Option<CVec> {
        let n = self.n_qubits();
        if n == 0 {
            return None;
        }
        let mut v = CVec::zeros(1 << n);
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[0] = h;
        v[(1 << n) - 1] = h;
        Some(v)
    }
}

/// One accepted herald pattern and the single-qubit unitaries (one per
/// logical pair, acting on the pair's two rails) that correct its output.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldPattern {
    pub pattern: Vec<usize>,
    pub correction: Vec<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub name: String,
    pub modes: usize,
    /// Input modes holding one photon each.
    pub inputs: Vec<usize>,
    pub unitary: CMat,
    pub herald_modes: Vec<usize>,
    /// Accepted patterns; the first is the fixed pattern used for single-pattern figures.
    pub heralds: Vec<HeraldPattern>,
    pub logical_pairs: Vec<(usize, usize)>,
    pub target: Target,
}

impl CircuitSpec {
    pub fn n_photons(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.logical_pairs.len()
    }

    pub fn logical_modes(&self) -> Vec<usize> {
        self.logical_pairs.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let tol = Tolerances::default();
        if self.unitary.nrows() != self.modes || self.unitary.ncols() != self.modes {
            return invalid(format!("{}: unitary is not {}x{}", self.name, self.modes, self.modes));
        }
        let dev = unitarity_deviation(&self.unitary);
        if dev > tol.unitary {
            return invalid(format!("{}: unitary deviation {dev:.3e}", self.name));
        }
        let mut seen = vec![false; self.modes];
        for &m in &self.inputs {
            if m >= self.modes || seen[m] {
                return invalid(format!("{}: bad input mode {m}", self.name));
            }
            seen[m] = true;
        }
        let logical = self.logical_modes();
        let mut used = vec![false; self.modes];
        for &m in logical.iter().chain(&self.herald_modes) {
            if m >= self.modes || used[m] {
                return invalid(format!("{}: herald and logical modes must be distinct and in range", self.name));
            }
            used[m] = true;
        }
        if self.target.n_qubits() != 0 && self.target.n_qubits() != self.n_qubits() {
            return invalid(format!("{}: target does not match logical pair count", self.name));
        }
        if self.heralds.is_empty() {
            return invalid(format!("{}: no herald patterns", self.name));
        }
        for h in &self.heralds {
            if h.pattern.len() != self.herald_modes.len() {
                return invalid(format!("{}: herald pattern length mismatch", self.name));
            }
            if h.pattern.iter().sum::<usize>() + self.n_qubits() != self.n_photons() {
                return invalid(format!("{}: herald photons plus logical photons must equal inputs", self.name));
            }
            if h.correction.len() != self.n_qubits() {
                return invalid(format!("{}: one correction per logical pair expected", self.name));
            }
            for u in &h.correction {
                if u.nrows() != 2 || u.ncols() != 2 || unitarity_deviation(u) > tol.unitary {
                    return invalid(format!("{}: correction is not a 2x2 unitary", self.name));
                }
            }
        }
        Ok(())
    }

    /// Copy with a different set of occupied input modes.
    pub fn with_inputs(&self, inputs: Vec<usize>) -> CircuitSpec {
        CircuitSpec { inputs, ..self.clone() }
    }

    /// Copy whose unitary is preceded by `u` on `modes`.
    pub fn with_preparation(&self, u: &CMat, modes: &[usize]) -> CircuitSpec {
        let pre = crate::linalg::embed(u, self.modes, modes);
        CircuitSpec { unitary: &self.unitary * pre, ..self.clone() }
    }

    /// Copy restricted to the listed herald patterns (by index).
    pub fn with_heralds(&self, idx: &[usize]) -> CircuitSpec {
        CircuitSpec { heralds: idx.iter().map(|&i| self.heralds[i].clone()).collect(), ..self.clone() }
    }
}

pub(crate) fn identity2() -> CMat {
    CMat::identity(2, 2)
}

pub(crate) fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub(crate) fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}
