//! Fock-basis matrix elements of Gaussian states and heralded projections.
//!
//! Elements follow `<m|rho|n> = T lhaf(A~)` with `A = X (I - sigma_Q^-1)`.
//! `A~` repeats creation-block index `s` by the ket occupation `m_s` and
//! annihilation-block index `s` by the bra occupation `n_s`; its diagonal is
//! the correspondingly repeated `gamma`. This is the one place the index
//! convention is fixed; the permanent-based oracle tests pin it.

use crate::error::{invalid, Error, Result};
use crate::gaussian::{block_swap, GaussianState, Tolerances};
use crate::hafnian::{lhaf_dp, lhaf_structured};
use crate::linalg::{factorial, hermitian_eigen, max_abs, CMat, CVec, C64, ZERO};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockPattern(pub Vec<usize>);

impl FockPattern {
    pub fn vacuum(modes: usize) -> Self {
        FockPattern(vec![0; modes])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn concat(&self, other: &FockPattern) -> FockPattern {
        FockPattern(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    /// All patterns over `modes` with exactly `total` photons and at most
    /// `cutoff` per mode, in lexicographic order.
    pub fn with_total(modes: usize, total: usize, cutoff: usize) -> Vec<FockPattern> {
        let mut out = Vec::new();
        let mut cur = vec![0; modes];
        fn rec(i: usize, left: usize, cutoff: usize, cur: &mut Vec<usize>, out: &mut Vec<FockPattern>) {
            if i + 1 == cur.len() {
                if left <= cutoff {
                    cur[i] = left;
                    out.push(FockPattern(cur.clone()));
                    cur[i] = 0;
                }
                return;
            }
            for k in 0..=left.min(cutoff) {
                cur[i] = k;
                rec(i + 1, left - k, cutoff, cur, out);
            }
            cur[i] = 0;
        }
        if modes == 0 {
            if total == 0 {
                out.push(FockPattern(vec![]));
            }
            return out;
        }
        rec(0, total, cutoff, &mut cur, &mut out);
        out.sort();
        out
    }
}

/// Intermediate matrices for element evaluation.
#[derive(Clone, Debug)]
pub struct HafInputs {
    pub sigma_q: CMat,
    pub a: CMat,
    pub gamma: CVec,
    /// `exp(-beta^dagger sigma_Q^-1 beta / 2) / sqrt(det sigma_Q)`; the factorial
    /// normalisation is applied per element.
    pub t: C64,
    pub x: CMat,
}

impl HafInputs {
    pub fn new(state: &GaussianState) -> Result<Self> {
        let l = state.num_modes();
        let sigma_q = state.sigma_q();
        let (vals, _) = hermitian_eigen(&sigma_q);
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if lo <= 0.0 || hi / lo > Tolerances::default().max_condition {
            return Err(Error::Numerical(format!("sigma_Q is singular (eigenvalues {lo:.3e}..{hi:.3e})")));
        }
        let qinv = sigma_q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("sigma_Q inversion failed".into()))?;
        let x = block_swap(l);
        let a = &x * (CMat::identity(2 * l, 2 * l) - &qinv);
        let beta = state.displacement();
        let gamma = (beta.adjoint() * &qinv).transpose();
        let det = sigma_q.clone().determinant().re;
        let expo = (beta.adjoint() * &qinv * beta)[(0, 0)];
        let t = (expo * -0.5).exp() / det.sqrt();
        Ok(HafInputs { sigma_q, a, gamma, t, x })
    }

    fn indices(l: usize, m: &FockPattern, n: &FockPattern) -> Vec<usize> {
        let mut idx = Vec::with_capacity(m.total() + n.total());
        for (s, &k) in n.0.iter().enumerate() {
            idx.extend(std::iter::repeat_n(s, k));
        }
        for (s, &k) in m.0.iter().enumerate() {
            idx.extend(std::iter::repeat_n(s + l, k));
        }
        idx
    }

    /// The reduced matrix `A~` for the element `<m|rho|n>`.
    pub fn a_tilde(&self, m: &FockPattern, n: &FockPattern) -> CMat {
        let l = self.a.nrows() / 2;
        let idx = Self::indices(l, m, n);
        let mut at = crate::linalg::select(&self.a, &idx, &idx);
        for (k, &i) in idx.iter().enumerate() {
            at[(k, k)] = self.gamma[i];
        }
        at
    }
}

fn check_patterns(l: usize, m: &FockPattern, n: &FockPattern) -> Result<()> {
    if m.len() != l || n.len() != l {
        return invalid(format!("pattern length must equal mode count {l}"));
    }
    Ok(())
}

/// Reference evaluation of a single element (any displacement).
pub fn fock_element(state: &GaussianState, m: &FockPattern, n: &FockPattern) -> Result<C64> {
    check_patterns(state.num_modes(), m, n)?;
    let h = HafInputs::new(state)?;
    let at = h.a_tilde(m, n);
    let norm = (m.factorial_product() * n.factorial_product()).sqrt();
    Ok(h.t * lhaf_dp(&at)? / norm)
}

/// Element evaluator for zero-mean states with structural splitting of the
/// hafnian and a separate amplitude route for pure states.
#[derive(Clone, Debug)]
pub struct FockEvaluator {
    l: usize,
    a: CMat,
    t: f64,
    pure: bool,
    zero_tol: f64,
}

impl FockEvaluator {
    pub fn new(state: &GaussianState) -> Result<Self> {
        Self::with_tolerances(state, &Tolerances::default())
    }

    pub fn with_tolerances(state: &GaussianState, tol: &Tolerances) -> Result<Self> {
        if !state.is_zero_mean() {
            return invalid("evaluator requires a zero-mean state");
        }
        let h = HafInputs::new(state)?;
        let l = state.num_modes();
        let off = max_abs(&h.a.view((0, l), (l, l)).into_owned());
        let pure = off <= tol.structural_zero * max_abs(&h.a).max(1.0);
        Ok(FockEvaluator { l, a: h.a, t: h.t.re, pure, zero_tol: tol.structural_zero })
    }

    pub fn num_modes(&self) -> usize {
        self.l
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    // Zero mean: the loop weights vanish.
    fn reduced(&self, idx: &[usize]) -> CMat {
        let mut at = crate::linalg::select(&self.a, idx, idx);
        at.fill_diagonal(ZERO);
        at
    }

    /// Vacuum element `<0|rho|0>`.
    pub fn vacuum_element(&self) -> f64 {
        self.t
    }

    pub fn element(&self, m: &FockPattern, n: &FockPattern) -> Result<C64> {
        check_patterns(self.l, m, n)?;
        if (m.total() + n.total()) % 2 == 1 {
            return Ok(ZERO);
        }
        let idx = HafInputs::indices(self.l, m, n);
        let at = self.reduced(&idx);
        let norm = (m.factorial_product() * n.factorial_product()).sqrt();
        Ok(lhaf_structured(&at, self.zero_tol)? * self.t / norm)
    }

    /// Amplitude `c_m` of a pure state with `<m|rho|n> = c_m conj(c_n)`.
    pub fn amplitude(&self, m: &FockPattern) -> Result<C64> {
        if !self.pure {
            return invalid("amplitudes exist only for pure states");
        }
        if m.len() != self.l {
            return invalid("pattern length must equal mode count");
        }
        if m.total() % 2 == 1 {
            return Ok(ZERO);
        }
        let mut idx = Vec::with_capacity(m.total());
        for (s, &k) in m.0.iter().enumerate() {
            idx.extend(std::iter::repeat_n(s + self.l, k));
        }
        let at = self.reduced(&idx);
        Ok(lhaf_structured(&at, self.zero_tol)? * self.t.sqrt() / m.factorial_product().sqrt())
    }
}

/// Output photon-number space for a heralded density.
#[derive(Clone, Debug)]
pub enum OutputSpace {
    /// Every pattern with at most `cutoff` photons per mode.
    PerMode { cutoff: usize },
    /// Patterns with exactly `total` photons, at most `cutoff` per mode.
    Total { total: usize, cutoff: usize },
    /// Patterns with exactly one photon in each group of output positions and
    /// none elsewhere.
    OnePerGroup { groups: Vec<Vec<usize>> },
    Explicit(Vec<FockPattern>),
}

/// Basis size above which a heralded density is refused.
pub const MAX_BASIS: usize = 40_000;

impl OutputSpace {
    pub fn basis(&self, n_out: usize) -> Result<Vec<FockPattern>> {
        let b = match self {
            OutputSpace::PerMode { cutoff } => {
                let count = (cutoff + 1).checked_pow(n_out as u32).unwrap_or(usize::MAX);
                if count > MAX_BASIS {
                    return Err(Error::Resource(format!("output space of {count} patterns")));
                }
                let mut all = Vec::new();
                for t in 0..=cutoff * n_out {
                    all.extend(FockPattern::with_total(n_out, t, *cutoff));
                }
                all.sort();
                all
            }
            OutputSpace::Total { total, cutoff } => FockPattern::with_total(n_out, *total, *cutoff),
            OutputSpace::OnePerGroup { groups } => {
                let mut out = vec![vec![0usize; n_out]];
                for g in groups {
                    let mut next = Vec::new();
                    for p in &out {
                        for &pos in g {
                            if pos >= n_out {
                                return invalid("group position out of range");
                            }
                            let mut q = p.clone();
                            q[pos] += 1;
                            next.push(q);
                        }
                    }
                    out = next;
                }
                let mut v: Vec<FockPattern> = out.into_iter().map(FockPattern).collect();
                v.sort();
                v.dedup();
                v
            }
            OutputSpace::Explicit(v) => {
                if v.iter().any(|p| p.len() != n_out) {
                    return invalid("explicit pattern has the wrong length");
                }
                v.clone()
            }
        };
        if b.len() > MAX_BASIS {
            return Err(Error::Resource(format!("output space of {} patterns", b.len())));
        }
        Ok(b)
    }
}

/// Density operator over a truncated Fock basis of labelled modes.
#[derive(Clone, Debug)]
pub struct FockDensity {
    pub modes: Vec<usize>,
    pub cutoff: usize,
    basis: Vec<FockPattern>,
    index: HashMap<FockPattern, usize>,
    matrix: CMat,
    pub herald_probability: f64,
    empty: bool,
}

/// Herald probabilities below this value produce a flagged empty density.
/// Raw multi-source herald probabilities scale as `kappa^(2n)`, so the floor
/// is only a guard against exact zeros; callers compare rate-normalised
/// probabilities against their own thresholds.
pub const MIN_PROBABILITY: f64 = 1e-250;

impl FockDensity {
    /// Normalises an unnormalised matrix, recording its trace as the probability.
    pub fn from_unnormalized(modes: Vec<usize>, basis: Vec<FockPattern>, matrix: CMat) -> Self {
        let cutoff = basis.iter().flat_map(|p| p.0.iter().copied()).max().unwrap_or(0);
        let index = basis.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let tr = crate::linalg::trace(&matrix).re;
        let empty = tr < MIN_PROBABILITY;
        let matrix = if empty { CMat::zeros(basis.len(), basis.len()) } else { matrix.unscale(tr) };
        FockDensity { modes, cutoff, basis, index, matrix, herald_probability: tr.max(0.0), empty }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn basis(&self) -> &[FockPattern] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn position(&self, p: &FockPattern) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn get(&self, ket: &FockPattern, bra: &FockPattern) -> C64 {
        match (self.index.get(ket), self.index.get(bra)) {
            (Some(&i), Some(&j)) => self.matrix[(i, j)],
            _ => ZERO,
        }
    }

    pub fn trace(&self) -> f64 {
        crate::linalg::trace(&self.matrix).re
    }

    /// Probability-weighted matrix `p rho`.
    pub fn unnormalized(&self) -> CMat {
        self.matrix.scale(self.herald_probability)
    }

    /// Incoherent sum `sum_i w_i p_i rho_i` of densities on the same basis,
    /// renormalised, with probability `sum_i w_i p_i`.
    pub fn mixture(parts: &[(f64, FockDensity)]) -> Result<FockDensity> {
        let first = parts.first().ok_or_else(|| Error::Invalid("empty mixture".into()))?;
        let mut acc = CMat::zeros(first.1.dim(), first.1.dim());
        for (w, d) in parts {
            if d.basis != first.1.basis {
                return invalid("mixture components use different bases");
            }
            acc += d.unnormalized().scale(*w);
        }
        Ok(FockDensity::from_unnormalized(first.1.modes.clone(), first.1.basis.clone(), acc))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        hermitian_eigen(&self.matrix).0[0]
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        crate::linalg::hermiticity_deviation(&self.matrix)
    }
}

/// Heralds `pattern` on `herald_modes` and returns the normalised density on
/// `out_modes` over all patterns with at most `cutoff` photons per mode.
/// Modes in neither list are traced out.
pub fn herald(
    state: &GaussianState,
    herald_modes: &[usize],
    pattern: &FockPattern,
    out_modes: &[usize],
    cutoff: usize,
) -> Result<FockDensity> {
    herald_with(
        state,
        herald_modes,
        std::slice::from_ref(pattern),
        out_modes,
        &OutputSpace::PerMode { cutoff },
    )
}

/// General heralding: the listed herald patterns are summed incoherently
/// (e.g. unresolved internal labels) and the output space is configurable.
pub fn herald_with(
    state: &GaussianState,
    herald_modes: &[usize],
    patterns: &[FockPattern],
    out_modes: &[usize],
    space: &OutputSpace,
) -> Result<FockDensity> {
    let l = state.num_modes();
    for (i, m) in herald_modes.iter().chain(out_modes).enumerate() {
        if *m >= l {
            return invalid(format!("mode {m} out of range"));
        }
        if herald_modes.iter().chain(out_modes).take(i).any(|x| x == m) {
            return invalid("herald and output modes must be distinct");
        }
    }
    if patterns.iter().any(|p| p.len() != herald_modes.len()) {
        return invalid("herald pattern length must equal herald mode count");
    }
    let keep: Vec<usize> = herald_modes.iter().chain(out_modes).copied().collect();
    let reduced = if keep.len() == l && keep.iter().enumerate().all(|(i, &m)| i == m) {
        state.clone()
    } else {
        state.reduced(&keep)?
    };
    let ev = FockEvaluator::new(&reduced)?;
    let basis = space.basis(out_modes.len())?;
    let matrix = herald_matrix(&ev, patterns, &basis)?;
    Ok(FockDensity::from_unnormalized(out_modes.to_vec(), basis, matrix))
}

/// Unnormalised heralded matrix over `basis` for an evaluator whose first
/// modes are the herald modes.
pub fn herald_matrix(ev: &FockEvaluator, patterns: &[FockPattern], basis: &[FockPattern]) -> Result<CMat> {
    let dim = basis.len();
    let mut total = CMat::zeros(dim, dim);
    if ev.is_pure() {
        let amps: Vec<Result<Vec<C64>>> = patterns
            .par_iter()
            .map(|h| basis.iter().map(|b| ev.amplitude(&h.concat(b))).collect())
            .collect();
        for a in amps {
            let v = CVec::from_vec(a?);
            total += &v * v.adjoint();
        }
        return Ok(total);
    }
    for h in patterns {
        let rows: Vec<Result<Vec<C64>>> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let ket = h.concat(&basis[i]);
                (0..=i).map(|j| ev.element(&ket, &h.concat(&basis[j]))).collect()
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (j, z) in row?.into_iter().enumerate() {
                total[(i, j)] += z;
                if i != j {
                    total[(j, i)] += z.conj();
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_element_is_one() {
        let v = GaussianState::vacuum(2).unwrap();
        let z = FockPattern::vacuum(2);
        assert!((fock_element(&v, &z, &z).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn pattern_enumeration() {
        let p = FockPattern::with_total(3, 2, 2);
        assert_eq!(p.len(), 6);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(FockPattern::with_total(3, 2, 1).len(), 3);
        let g = OutputSpace::OnePerGroup { groups: vec![vec![0, 1], vec![2, 3]] };
        assert_eq!(g.basis(4).unwrap().len(), 4);
    }

    #[test]
    fn herald_zero_probability_is_flagged() {
        let v = GaussianState::vacuum(2).unwrap();
        let d = herald(&v, &[0], &FockPattern(vec![1]), &[1], 2).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.herald_probability, 0.0);
    }
}
