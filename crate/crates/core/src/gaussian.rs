//! Multimode Gaussian states in the complex `(a, a^dagger)` ordering.
//!
//! The covariance is `sigma_jk = Tr[rho {zeta_j, zeta_k^dagger}]/2 - beta_j beta_k^*`
//! with `zeta = (a_1..a_l, a_1^dagger..a_l^dagger)`, so the vacuum has `sigma = I/2`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{embed, hermiticity_deviation, max_abs, select, CMat, CVec, C64, ONE, ZERO};
use nalgebra::Cholesky;

/// Numerical tolerances used by state validation and the Fock layer.
#[derive(Clone, Debug)]
pub struct Tolerances {
    pub hermitian: f64,
    pub symmetry: f64,
    pub unitary: f64,
    /// Matrix entries below this (relative to the largest entry) are treated
    /// as structural zeros when splitting hafnians into independent blocks.
    pub structural_zero: f64,
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-12,
            symmetry: 1e-12,
            unitary: 1e-10,
            structural_zero: 1e-13,
            max_condition: 1e12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GaussianState {
    l: usize,
    beta: CVec,
    sigma: CMat,
}

/// Block swap `X = [[0, I], [I, 0]]` on `2l` indices.
pub fn block_swap(l: usize) -> CMat {
    let mut x = CMat::zeros(2 * l, 2 * l);
    for j in 0..l {
        x[(j, j + l)] = ONE;
        x[(j + l, j)] = ONE;
    }
    x
}

impl GaussianState {
    pub fn vacuum(l: usize) -> Result<Self> {
        if l == 0 {
            return invalid("vacuum needs at least one mode");
        }
        Ok(GaussianState {
            l,
            beta: CVec::zeros(2 * l),
            sigma: CMat::identity(2 * l, 2 * l).scale(0.5),
        })
    }

    pub fn from_moments(beta: CVec, sigma: CMat) -> Result<Self> {
        if sigma.nrows() % 2 != 0 || !sigma.is_square() || beta.len() != sigma.nrows() {
            return invalid("moment dimensions do not match");
        }
        let s = GaussianState { l: sigma.nrows() / 2, beta, sigma };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    pub fn num_modes(&self) -> usize {
        self.l
    }

    pub fn displacement(&self) -> &CVec {
        &self.beta
    }

    pub fn covariance(&self) -> &CMat {
        &self.sigma
    }

    pub fn sigma_q(&self) -> CMat {
        &self.sigma + CMat::identity(2 * self.l, 2 * self.l).scale(0.5)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.beta.iter().all(|z| *z == ZERO)
    }

    /// Checks the four state invariants, reporting the first violation.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let l = self.l;
        let scale = max_abs(&self.sigma).max(1.0);
        let h = hermiticity_deviation(&self.sigma);
        if h > tol.hermitian * scale {
            return Err(Error::Numerical(format!("covariance not Hermitian (deviation {h:.3e})")));
        }
        let x = block_swap(l);
        let conj = &x * self.sigma.map(|z| z.conj()) * &x;
        let d = max_abs(&(conj - &self.sigma));
        if d > tol.symmetry * scale {
            return Err(Error::Numerical(format!("covariance breaks conjugation symmetry ({d:.3e})")));
        }
        for j in 0..l {
            if (self.beta[j + l] - self.beta[j].conj()).norm() > tol.symmetry * scale {
                return Err(Error::Numerical("creation displacement is not the conjugate".into()));
            }
        }
        let q = self.sigma_q();
        let q = (&q + q.adjoint()).scale(0.5);
        if Cholesky::new(q).is_none() {
            return Err(Error::Numerical("sigma + I/2 is not positive definite".into()));
        }
        Ok(())
    }

    fn checked(self) -> Result<Self> {
        if cfg!(debug_assertions) {
            self.validate(&Tolerances::default())?;
        }
        Ok(self)
    }

    fn apply(&self, s: &CMat) -> Result<Self> {
        GaussianState {
            l: self.l,
            beta: s * &self.beta,
            sigma: s * &self.sigma * s.adjoint(),
        }
        .checked()
    }

    fn check_mode(&self, m: usize) -> Result<()> {
        if m >= self.l {
            return invalid(format!("mode {m} out of range for {} modes", self.l));
        }
        Ok(())
    }

    /// Two-mode squeezer with `kappa = tanh r`.
    pub fn two_mode_squeeze(&self, signal: usize, idler: usize, kappa: f64) -> Result<Self> {
        self.check_mode(signal)?;
        self.check_mode(idler)?;
        if signal == idler {
            return invalid("two-mode squeezer needs distinct modes");
        }
        if !(0.0..1.0).contains(&kappa) {
            return invalid(format!("squeezing kappa {kappa} outside [0,1)"));
        }
        let l = self.l;
        let r = kappa.atanh();
        let (ch, sh) = (C64::new(r.cosh(), 0.0), C64::new(r.sinh(), 0.0));
        let mut s = CMat::identity(2 * l, 2 * l);
        for &(p, q) in &[(signal, idler), (idler, signal)] {
            s[(p, p)] = ch;
            s[(p, q + l)] = sh;
            s[(p + l, p + l)] = ch;
            s[(p + l, q)] = sh;
        }
        self.apply(&s)
    }

    /// Passive interferometer `U` acting on the listed modes.
    pub fn interfere(&self, u: &CMat, modes: &[usize]) -> Result<Self> {
        if !u.is_square() || u.nrows() != modes.len() {
            return invalid("unitary size does not match mode list");
        }
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return invalid("repeated mode in interferometer");
            }
        }
        let dev = crate::linalg::unitarity_deviation(u);
        if dev > Tolerances::default().unitary {
            return invalid(format!("matrix is not unitary (deviation {dev:.3e})"));
        }
        let l = self.l;
        let w = embed(u, l, modes);
        let s = crate::linalg::direct_sum(&w, &w.map(|z| z.conj()));
        self.apply(&s)
    }

    /// Pure-loss channel `a -> sqrt(eta) a + sqrt(1-eta) b` with `b` in vacuum.
    pub fn loss_channel(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return invalid(format!("transmission {eta} outside [0,1]"));
        }
        let l = self.l;
        let t = eta.sqrt();
        let mut out = self.clone();
        for idx in [mode, mode + l] {
            out.beta[idx] *= t;
            for k in 0..2 * l {
                out.sigma[(idx, k)] *= t;
                out.sigma[(k, idx)] *= t;
            }
            out.sigma[(idx, idx)] += C64::new((1.0 - eta) / 2.0, 0.0);
        }
        out.checked()
    }

    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        self.sigma[(mode, mode)].re - 0.5 + self.beta[mode].norm_sqr()
    }

    pub fn total_mean_photons(&self) -> f64 {
        (0..self.l).map(|m| self.mean_photon_number(m)).sum()
    }

    fn indices(&self, modes: &[usize]) -> Vec<usize> {
        modes.iter().copied().chain(modes.iter().map(|m| m + self.l)).collect()
    }

    /// Marginal state on `modes` (all other modes traced out), in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx = self.indices(modes);
        Ok(GaussianState {
            l: modes.len(),
            beta: CVec::from_iterator(idx.len(), idx.iter().map(|&i| self.beta[i])),
            sigma: select(&self.sigma, &idx, &idx),
        })
    }

    /// Probability that every listed mode holds no photons.
    pub fn vacuum_probability(&self, modes: &[usize]) -> Result<f64> {
        if modes.is_empty() {
            return Ok(1.0);
        }
        let r = self.reduced(modes)?;
        let q = r.sigma_q();
        let det = q.clone().determinant().re;
        if det <= 0.0 {
            return Err(Error::Numerical("non-positive det(sigma_Q)".into()));
        }
        let inv = q.try_inverse().ok_or_else(|| Error::Numerical("singular sigma_Q".into()))?;
        let expo = (r.beta.adjoint() * inv * &r.beta)[(0, 0)].re;
        Ok((-0.5 * expo).exp() / det.sqrt())
    }

    /// Projects `modes` onto vacuum. Returns the probability of that outcome and
    /// the normalised conditional state of the remaining modes (original order).
    pub fn condition_on_vacuum(&self, modes: &[usize]) -> Result<(f64, GaussianState)> {
        if !self.is_zero_mean() {
            return invalid("vacuum conditioning is implemented for zero-mean states");
        }
        let keep: Vec<usize> = (0..self.l).filter(|m| !modes.contains(m)).collect();
        if keep.is_empty() {
            return invalid("conditioning would remove every mode");
        }
        let l = self.l;
        let q = self.sigma_q();
        let det_full = q.clone().determinant().re;
        let qinv = q.try_inverse().ok_or_else(|| Error::Numerical("singular sigma_Q".into()))?;
        let x = block_swap(l);
        let a = &x * (CMat::identity(2 * l, 2 * l) - qinv);
        let idx = self.indices(&keep);
        let a_r = select(&a, &idx, &idx);
        let k = keep.len();
        let inv_q_r = CMat::identity(2 * k, 2 * k) - block_swap(k) * a_r;
        let q_r = inv_q_r
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular conditional sigma_Q".into()))?;
        let det_r = q_r.clone().determinant().re;
        let prob = (det_r / det_full).sqrt();
        let mut sigma = &q_r - CMat::identity(2 * k, 2 * k).scale(0.5);
        sigma = (&sigma + sigma.adjoint()).scale(0.5);
        let state = GaussianState { l: k, beta: CVec::zeros(2 * k), sigma };
        Ok((prob, state))
    }

    /// `Tr(rho^2) = 1/sqrt(det(2 sigma))`.
    pub fn purity(&self) -> f64 {
        let d = self.sigma.scale(2.0).determinant().re;
        1.0 / d.sqrt()
    }
}
