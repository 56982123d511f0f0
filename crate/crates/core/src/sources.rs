//! Photon source models: ideal, random-source (RS) Schmidt mixtures and
//! orthogonal-bad-bits (OBB), plus firing enumeration and JSA spectra.

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, psd_sqrt, trace, CMat, C64};
use crate::fock::FockPattern;
use serde::{Deserialize, Serialize};

/// Default cap on the number of enumerated source firings.
pub const FIRING_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceModel {
    Ideal,
    /// Normalised Schmidt probabilities `q_i`.
    Rs { q: Vec<f64> },
    Obb { visibility: f64 },
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceModel::Ideal => Ok(()),
            SourceModel::Rs { q } => rs_purity(q).map(|_| ()),
            SourceModel::Obb { visibility } => check_visibility(*visibility),
        }
    }

    /// Internal label dimension for `n_photons` photons.
    pub fn internal_dim(&self, n_photons: usize) -> usize {
        match self {
            SourceModel::Ideal => 1,
            SourceModel::Rs { q } => q.len(),
            SourceModel::Obb { .. } => n_photons + 1,
        }
    }

    /// Pairwise HOM visibility between two photons of this model.
    pub fn visibility(&self) -> f64 {
        match self {
            SourceModel::Ideal => 1.0,
            SourceModel::Rs { q } => q.iter().map(|x| x * x).sum(),
            SourceModel::Obb { visibility } => *visibility,
        }
    }

    /// Two-Schmidt RS model with pairwise visibility `v`, taking the larger
    /// root `p0 >= 1/2`.
    pub fn rs_two_schmidt(v: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&v) {
            return invalid(format!("visibility {v} outside [0.5, 1] for two Schmidt modes"));
        }
        let p0 = 0.5 * (1.0 + (2.0 * v - 1.0).max(0.0).sqrt());
        Ok(SourceModel::Rs { q: vec![p0, 1.0 - p0] })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceModel::Ideal => "ideal",
            SourceModel::Rs { .. } => "rs",
            SourceModel::Obb { .. } => "obb",
        }
    }
}

fn check_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return invalid(format!("visibility {v} outside [0,1]"));
    }
    Ok(())
}

/// `P = sum q_i^2`, the purity of the heralded photon.
pub fn rs_purity(q: &[f64]) -> Result<f64> {
    if q.is_empty() || q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return invalid("Schmidt probabilities must lie in [0,1]");
    }
    let s: f64 = q.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return invalid(format!("Schmidt probabilities sum to {s}, not 1"));
    }
    Ok(q.iter().map(|x| x * x).sum())
}

/// Per-mode squeezing `kappa_i` whose single-pair probabilities
/// `kappa_i^2 (1 - kappa_i^2)` are proportional to `q_i` and sum to `pair_rate`.
pub fn kappas_from_q(q: &[f64], pair_rate: f64) -> Result<Vec<f64>> {
    rs_purity(q)?;
    if !(0.0..=0.25).contains(&pair_rate) {
        return invalid("single-pair probability per mode cannot exceed 1/4");
    }
    q.iter()
        .map(|&qi| {
            let p = qi * pair_rate;
            // smaller root of k^4 - k^2 + p = 0
            let k2 = 0.5 * (1.0 - (1.0 - 4.0 * p).sqrt());
            Ok(k2.sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceFiring {
    pub assignment: Vec<usize>,
    pub weight: f64,
}

impl SourceFiring {
    /// Photon count per Schmidt mode.
    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &a in &self.assignment {
            c[a] += 1;
        }
        c
    }
}

/// Every assignment of `n_photons` photons to Schmidt modes, lexicographic.
pub fn enumerate_firings(q: &[f64], n_photons: usize, cap: usize) -> Result<Vec<SourceFiring>> {
    rs_purity(q)?;
    let k = q.len();
    if n_photons == 0 {
        return invalid("at least one photon is required");
    }
    let count = k.checked_pow(n_photons as u32).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::Resource(format!("{count} source firings exceed the cap of {cap}")));
    }
    let mut out = Vec::with_capacity(count);
    let mut a = vec![0usize; n_photons];
    loop {
        let weight = a.iter().map(|&i| q[i]).product();
        out.push(SourceFiring { assignment: a.clone(), weight });
        let mut pos = n_photons;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            a[pos] += 1;
            if a[pos] < k {
                break;
            }
            a[pos] = 0;
        }
    }
}

/// Keeps the patterns over `(mode, label)` positions whose photon count in every
/// label does not exceed the firing's count for that label. `label_of[i]` gives
/// the Schmidt label of position `i`.
pub fn filter_heralds(firing: &SourceFiring, k: usize, label_of: &[usize], patterns: &[FockPattern]) -> Vec<FockPattern> {
    let allowed = firing.counts(k);
    patterns
        .iter()
        .filter(|p| {
            let mut used = vec![0usize; k];
            for (i, &n) in p.0.iter().enumerate() {
                used[label_of[i]] += n;
            }
            used.iter().zip(&allowed).all(|(u, a)| u <= a)
        })
        .cloned()
        .collect()
}

/// Internal-state preparation for OBB photon `i` (1-based): a real rotation
/// between internal mode 0 and internal mode `i`.
pub fn obb_distinguishability_unitary(i: usize, v: f64, n_internal: usize) -> Result<CMat> {
    check_visibility(v)?;
    if i == 0 || i >= n_internal {
        return invalid(format!("photon index {i} outside 1..{n_internal}"));
    }
    let alpha = v.powf(0.25);
    let beta = (1.0 - v.sqrt()).max(0.0).sqrt();
    let mut d = CMat::identity(n_internal, n_internal);
    d[(0, 0)] = c(alpha, 0.0);
    d[(0, i)] = c(-beta, 0.0);
    d[(i, 0)] = c(beta, 0.0);
    d[(i, i)] = c(alpha, 0.0);
    Ok(d)
}

/// Discretised joint spectral amplitude over the filter passband.
#[derive(Clone, Debug)]
pub struct JsaGrid {
    pub amplitude: CMat,
    pub filter_width: f64,
    pub pump_bandwidth: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct JsaParams {
    /// Rectangular filter width on signal and idler (GHz).
    pub filter_width: f64,
    /// Pump intensity FWHM (GHz).
    pub pump_bandwidth: f64,
    /// Phase-matching sinc width in the difference frequency (GHz).
    pub phase_matching_width: f64,
    pub points: usize,
}

impl Default for JsaParams {
    fn default() -> Self {
        JsaParams { filter_width: 200.0, pump_bandwidth: 400.0, phase_matching_width: 1000.0, points: 200 }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let y = std::f64::consts::PI * x;
        y.sin() / y
    }
}

impl JsaGrid {
    /// Gaussian pump envelope in `nu1 + nu2` times sinc phase matching in
    /// `nu1 - nu2`, sampled on the square passband of the filters.
    pub fn model(p: &JsaParams) -> Result<Self> {
        if p.filter_width <= 0.0 || p.pump_bandwidth <= 0.0 || p.phase_matching_width <= 0.0 || p.points < 2 {
            return invalid("JSA parameters must be positive");
        }
        let n = p.points;
        let nu = |i: usize| -p.filter_width / 2.0 + p.filter_width * i as f64 / (n - 1) as f64;
        let sig = p.pump_bandwidth / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let mut f = CMat::from_fn(n, n, |i, j| {
            let (a, b) = (nu(i), nu(j));
            c((-(a + b).powi(2) / (4.0 * sig * sig)).exp() * sinc((a - b) / p.phase_matching_width), 0.0)
        });
        let norm = f.norm();
        f.unscale_mut(norm);
        Ok(JsaGrid { amplitude: f, filter_width: p.filter_width, pump_bandwidth: p.pump_bandwidth })
    }

    pub fn from_amplitude(amplitude: CMat) -> Result<Self> {
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("JSA has non-finite entries");
        }
        let norm = amplitude.norm();
        if norm == 0.0 {
            return invalid("JSA is identically zero");
        }
        Ok(JsaGrid { amplitude: amplitude.unscale(norm), filter_width: 0.0, pump_bandwidth: 0.0 })
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtTruncation {
    /// Retained coefficients, renormalised so their squares sum to one.
    pub coefficients: Vec<f64>,
    pub k_trunc: usize,
    pub fidelity: f64,
    /// All singular values of the normalised grid, descending.
    pub spectrum: Vec<f64>,
}

impl SchmidtTruncation {
    /// Schmidt probabilities `q_k = s_k^2` of the retained modes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|s| s * s).collect()
    }
}

/// Fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2` between two densities.
pub fn uhlmann_fidelity(a: &CMat, b: &CMat) -> f64 {
    let sa = psd_sqrt(a);
    let inner = &sa * b * &sa;
    let t = trace(&psd_sqrt(&inner)).re;
    t * t
}

/// SVD of the JSA, keeping coefficients `s_k >= eps`.
pub fn schmidt_from_jsa(jsa: &JsaGrid, eps: f64) -> Result<SchmidtTruncation> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("truncation threshold {eps} outside (0,1)"));
    }
    let svd = jsa.amplitude.clone().svd(true, false);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let spectrum: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let kept: Vec<usize> = order.iter().copied().filter(|&k| svd.singular_values[k] >= eps).collect();
    if kept.is_empty() {
        return Err(Error::Invalid(format!("no Schmidt coefficient reaches {eps}")));
    }
    let n = jsa.amplitude.nrows();
    let rho = &jsa.amplitude * jsa.amplitude.adjoint();
    let mut rho_t = CMat::zeros(n, n);
    let mut norm = 0.0;
    for &k in &kept {
        let s2 = svd.singular_values[k].powi(2);
        let col = u.column(k);
        rho_t += (col * col.adjoint()).scale(s2);
        norm += s2;
    }
    rho_t.unscale_mut(norm);
    let fidelity = uhlmann_fidelity(&rho, &rho_t).min(1.0);
    let coefficients = kept.iter().map(|&k| svd.singular_values[k] / norm.sqrt()).collect();
    Ok(SchmidtTruncation { coefficients, k_trunc: kept.len(), fidelity, spectrum })
}

/// Average internal state `sum q_i |i><i|` of an RS photon.
pub fn rs_internal_state(q: &[f64]) -> CMat {
    CMat::from_diagonal(&crate::linalg::CVec::from_iterator(q.len(), q.iter().map(|&x| C64::new(x, 0.0))))
}

/// Internal state vector of OBB photon `i` (1-based) in dimension `n_internal`.
pub fn obb_internal_state(i: usize, v: f64, n_internal: usize) -> Result<crate::linalg::CVec> {
    let d = obb_distinguishability_unitary(i, v, n_internal)?;
    Ok(d.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{unitarity_deviation, ONE};

    #[test]
    fn purity_examples() {
        assert_eq!(rs_purity(&[1.0]).unwrap(), 1.0);
        assert!((rs_purity(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((rs_purity(&[0.8, 0.2]).unwrap() - 0.68).abs() < 1e-15);
        assert!(rs_purity(&[0.8, 0.3]).is_err());
    }

    #[test]
    fn firing_counts() {
        assert_eq!(enumerate_firings(&[1.0], 4, FIRING_CAP).unwrap().len(), 1);
        assert_eq!(enumerate_firings(&[0.7, 0.3], 4, FIRING_CAP).unwrap().len(), 16);
        let f = enumerate_firings(&[0.7, 0.3], 8, FIRING_CAP).unwrap();
        assert_eq!(f.len(), 256);
        assert!((f.iter().map(|x| x.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(f.windows(2).all(|w| w[0].assignment < w[1].assignment));
        assert!(matches!(enumerate_firings(&[0.5, 0.5], 21, FIRING_CAP), Err(Error::Resource(_))));
    }

    #[test]
    fn obb_overlap_is_visibility() {
        for k in 0..=100 {
            let v = k as f64 / 100.0;
            let d = obb_distinguishability_unitary(2, v, 5).unwrap();
            assert!(unitarity_deviation(&d) < 1e-12);
            let a = obb_internal_state(1, v, 5).unwrap();
            let b = obb_internal_state(2, v, 5).unwrap();
            assert!((a.dotc(&b).norm_sqr() - v).abs() < 1e-12);
        }
        let id = obb_distinguishability_unitary(1, 1.0, 3).unwrap();
        assert!((id[(0, 0)] - ONE).norm() < 1e-15 && id[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn two_schmidt_roots() {
        let m = SourceModel::rs_two_schmidt(0.68).unwrap();
        assert!((m.visibility() - 0.68).abs() < 1e-12);
        assert!(SourceModel::rs_two_schmidt(0.4).is_err());
    }

    #[test]
    fn kappas_reproduce_rate() {
        let k = kappas_from_q(&[0.8, 0.2], 0.0384).unwrap();
        let p: Vec<f64> = k.iter().map(|x| x * x * (1.0 - x * x)).collect();
        assert!((p[0] / p[1] - 4.0).abs() < 1e-9);
        assert!((p.iter().sum::<f64>() - 0.0384).abs() < 1e-12);
    }
}
