//! Brute-force reference implementations used to check the fast paths:
//! matching enumeration for loop hafnians, permutation sums for permanents
//! a second-quantised squeezed-network amplitude, and decomposition sampling
//! for the entanglement of formation.

use crate::fock::{fock_element, FockEvaluator, FockPattern};
use crate::gaussian::GaussianState;
use crate::hafnian::{loop_hafnian, permanent};
use crate::experiments::{analytic_fusion, AnalyticModel};
use crate::linalg::{c, hermitian_eigen, CMat, CVec, C64, ONE, ZERO};
use crate::tomography::{entanglement_of_formation, pure_state_entanglement, QubitDensity};
use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gauss(r: &mut StdRng) -> f64 {
    // Box-Muller
    let u: f64 = r.random::<f64>().max(1e-300);
    let v: f64 = r.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_complex_matrix(r: &mut StdRng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c(gauss(r), gauss(r)))
}

pub fn random_symmetric(r: &mut StdRng, n: usize) -> CMat {
    let a = random_complex_matrix(r, n, n);
    (&a + a.transpose()).scale(0.5)
}

/// Haar-ish random unitary from the QR factorisation of a Ginibre matrix.
pub fn random_unitary(r: &mut StdRng, n: usize) -> CMat {
    let g = random_complex_matrix(r, n, n);
    let qr = g.qr();
    let q = qr.q();
    let rr = qr.r();
    let mut u = q.clone();
    for j in 0..n {
        let d = rr[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            u[(i, j)] = q[(i, j)] * ph;
        }
    }
    u
}

/// Loop hafnian by explicit enumeration of every perfect matching with loops.
pub fn enumerate_lhaf(m: &CMat) -> C64 {
    fn matchings(verts: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if verts.is_empty() {
            out.push(acc.clone());
            return;
        }
        let v = verts[0];
        let rest = &verts[1..];
        acc.push((v, v));
        matchings(rest, acc, out);
        acc.pop();
        for (k, &w) in rest.iter().enumerate() {
            let remaining: Vec<usize> = rest.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, &x)| x).collect();
            acc.push((v, w));
            matchings(&remaining, acc, out);
            acc.pop();
        }
    }
    let verts: Vec<usize> = (0..m.nrows()).collect();
    let mut all = Vec::new();
    matchings(&verts, &mut Vec::new(), &mut all);
    all.iter().map(|mt| mt.iter().map(|&(i, j)| m[(i, j)]).product::<C64>()).sum()
}

/// Permanent by direct summation over permutations.
pub fn permanent_brute(m: &CMat) -> C64 {
    fn rec(m: &CMat, row: usize, used: &mut Vec<bool>) -> C64 {
        if row == m.nrows() {
            return ONE;
        }
        let mut s = ZERO;
        for j in 0..m.ncols() {
            if !used[j] {
                used[j] = true;
                s += m[(row, j)] * rec(m, row + 1, used);
                used[j] = false;
            }
        }
        s
    }
    rec(m, 0, &mut vec![false; m.ncols()])
}

/// Permanent by Ryser's inclusion-exclusion formula.
pub fn permanent_ryser(m: &CMat) -> C64 {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    let mut total = ZERO;
    for set in 1usize..(1 << n) {
        let mut prod = ONE;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                if set >> j & 1 == 1 {
                    row += m[(i, j)];
                }
            }
            prod *= row;
        }
        let sign = if (n - set.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

pub fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn rows_of(p: &[usize]) -> Vec<usize> {
    p.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect()
}

/// Second-quantised oracle: amplitude `<out| U_hat |in>` of a passive
/// interferometer in which `a_j^dagger -> sum_i U_ij a_i^dagger`.
pub fn transition_amplitude(u: &CMat, input: &[usize], output: &[usize]) -> C64 {
    let ni: usize = input.iter().sum();
    let no: usize = output.iter().sum();
    if ni != no {
        return ZERO;
    }
    let r = rows_of(output);
    let cc = rows_of(input);
    let sub = CMat::from_fn(r.len(), cc.len(), |i, j| u[(r[i], cc[j])]);
    let norm: f64 = input.iter().chain(output).map(|&k| fact(k)).product();
    let p = if sub.nrows() <= 6 { permanent_brute(&sub) } else { permanent_ryser(&sub) };
    p / norm.sqrt()
}

/// Amplitude of `U_hat` applied to a product of two-mode squeezed vacua
/// `sqrt(1-k^2) sum_n k^n |n,n>` on the listed mode pairs.
pub fn squeezed_network_amplitude(l: usize, pairs: &[(usize, usize, f64)], u: &CMat, output: &[usize]) -> C64 {
    let total: usize = output.iter().sum();
    if total % 2 == 1 {
        return ZERO;
    }
    let half = total / 2;
    let mut amp = ZERO;
    let mut counts = vec![0usize; pairs.len()];
    loop {
        if counts.iter().sum::<usize>() == half {
            let mut input = vec![0usize; l];
            let mut coeff = 1.0;
            for (&(s, i, k), &n) in pairs.iter().zip(&counts) {
                input[s] += n;
                input[i] += n;
                coeff *= (1.0 - k * k).sqrt() * k.powi(n as i32);
            }
            amp += transition_amplitude(u, &input, output) * coeff;
        }
        let mut pos = 0;
        loop {
            if pos == counts.len() {
                return amp;
            }
            counts[pos] += 1;
            if counts[pos] <= half {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

pub fn patterns_up_to(l: usize, max: usize) -> Vec<FockPattern> {
    (0..=max).flat_map(|t| FockPattern::with_total(l, t, t)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// Loop hafnians of random symmetric complex matrices (sizes `0..=8`)
/// against matching enumeration; relative error.
pub fn check_loop_hafnian(trials: usize, seed: u64) -> OracleCheck {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let n = trial % 9;
        let m = random_symmetric(&mut r, n);
        let fast = loop_hafnian(&m).map_or(C64::new(f64::NAN, 0.0), |z| z);
        let slow = enumerate_lhaf(&m);
        let rel = (fast - slow).norm() / slow.norm().max(1e-300);
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
    }
    OracleCheck { name: "loop hafnian vs matching enumeration", cases: trials, max_error: worst, tolerance: 1e-9 }
}

pub fn check_permanent(seed: u64) -> OracleCheck {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for n in 0..8 {
        let m = random_complex_matrix(&mut r, n, n);
        let b = permanent_brute(&m);
        worst = worst.max((permanent(&m) - b).norm() / b.norm().max(1.0));
    }
    OracleCheck { name: "permanent vs permutation sum", cases: 8, max_error: worst, tolerance: 1e-10 }
}

/// Fock elements of a 4-mode squeezed-and-interfered state against the
/// second-quantised amplitude oracle; absolute error.
pub fn check_fock_elements(seed: u64) -> OracleCheck {
    let mut r = rng(seed);
    let u = random_unitary(&mut r, 4);
    let pairs = [(0usize, 1usize, 0.35f64), (2, 3, 0.5)];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let state = (|| {
        let mut s = GaussianState::vacuum(4)?;
        for &(a, b, k) in &pairs {
            s = s.two_mode_squeeze(a, b, k)?;
        }
        s.interfere(&u, &[0, 1, 2, 3])
    })();
    let Ok(s) = state else {
        return OracleCheck { name: "Fock elements vs permanent oracle", cases: 0, max_error: f64::INFINITY, tolerance: 1e-8 };
    };
    let ev = FockEvaluator::new(&s).ok();
    let pats = patterns_up_to(4, 2);
    let amps: Vec<C64> = pats.iter().map(|p| squeezed_network_amplitude(4, &pairs, &u, &p.0)).collect();
    for (m, am) in pats.iter().zip(&amps) {
        for (n, an) in pats.iter().zip(&amps) {
            let want = am * an.conj();
            let got = fock_element(&s, m, n).unwrap_or(C64::new(f64::NAN, 0.0));
            let fast = ev.as_ref().and_then(|e| e.element(m, n).ok()).unwrap_or(C64::new(f64::NAN, 0.0));
            for z in [got, fast] {
                let e = (z - want).norm();
                worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
            }
            cases += 1;
        }
    }
    OracleCheck { name: "Fock elements vs permanent oracle", cases, max_error: worst, tolerance: 1e-8 }
}

/// Average pure-state entanglement of the decomposition
/// `psi_i = sum_j conj(U_ij) a_j`, where the columns of `a` are `sqrt(l_j) e_j`.
fn decomposition_average(a: &CMat, u: &CMat) -> f64 {
    (0..u.nrows())
        .map(|i| {
            let psi = a * u.row(i).adjoint();
            let w = psi.norm_squared();
            if w < 1e-300 {
                0.0
            } else {
                w * pure_state_entanglement(&psi)
            }
        })
        .sum()
}

fn hermitian_from(x: &[f64], r: usize) -> CMat {
    let mut h = CMat::zeros(r, r);
    let mut k = 0;
    for i in 0..r {
        h[(i, i)] = c(x[k], 0.0);
        k += 1;
        for j in i + 1..r {
            h[(i, j)] = c(x[k], x[k + 1]);
            h[(j, i)] = c(x[k], -x[k + 1]);
            k += 2;
        }
    }
    h
}

fn exp_i(h: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&l| c(l.cos(), l.sin()))));
    &vecs * d * vecs.adjoint()
}

struct DecompositionCost<'a> {
    a: &'a CMat,
    u0: &'a CMat,
}

impl CostFunction for DecompositionCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let r = self.u0.nrows();
        Ok(decomposition_average(self.a, &(exp_i(&hermitian_from(x, r)) * self.u0)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EofBound {
    /// Entanglement of formation from the concurrence.
    pub analytic: f64,
    /// Smallest average entanglement over the random decompositions.
    pub sampled_min: f64,
    /// Best value after local refinement of the best samples.
    pub refined: f64,
}

/// Upper bounds on the entanglement of formation of `rho` from `samples`
/// random decompositions into `rank(rho)` pure states; the `refine` best are
/// then minimised by Nelder-Mead over `U -> exp(iH) U`.
pub fn eof_decomposition_bound(rho: &QubitDensity, samples: usize, refine: usize, seed: u64) -> crate::Result<EofBound> {
    let analytic = entanglement_of_formation(rho)?;
    let (vals, vecs) = hermitian_eigen(&rho.matrix);
    let kept: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-12).collect();
    let r = kept.len();
    let a = CMat::from_columns(&kept.iter().map(|&k| vecs.column(k).scale(vals[k].sqrt())).collect::<Vec<_>>());
    let mut g = rng(seed);
    let mut scored: Vec<(f64, CMat)> = (0..samples)
        .map(|_| {
            let u = random_unitary(&mut g, r);
            (decomposition_average(&a, &u), u)
        })
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let sampled_min = scored.first().map_or(f64::INFINITY, |s| s.0);
    let mut refined = sampled_min;
    let dim = r * r;
    for (_, u0) in scored.iter().take(refine) {
        let mut simplex = vec![vec![0.0; dim]];
        for k in 0..dim {
            let mut v = vec![0.0; dim];
            v[k] = 0.2;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-14)
            .map_err(|e| crate::Error::Numerical(e.to_string()))?;
        let res = Executor::new(DecompositionCost { a: &a, u0 }, solver)
            .configure(|s| s.max_iters(20_000))
            .run()
            .map_err(|e| crate::Error::Numerical(e.to_string()))?;
        refined = refined.min(res.state().get_best_cost());
    }
    Ok(EofBound { analytic, sampled_min, refined })
}

/// Decomposition bounds on the closed-form OBB states at `V = 0.5` and `0.9`:
/// no decomposition may beat the analytic value and the refined bound must
/// close to within the tolerance.
pub fn check_eof_decompositions(samples: usize, seed: u64) -> OracleCheck {
    let mut worst: f64 = 0.0;
    for v in [0.5, 0.9] {
        let bound = analytic_fusion(AnalyticModel::Obb { v }, 0)
            .and_then(|rho| eof_decomposition_bound(&rho, samples, 3, seed));
        worst = match bound {
            Ok(b) if b.sampled_min < b.analytic - 1e-9 || b.refined < b.analytic - 1e-9 => f64::INFINITY,
            Ok(b) => worst.max(b.refined - b.analytic),
            Err(_) => f64::INFINITY,
        };
    }
    OracleCheck { name: "EoF vs decomposition sampling", cases: 2 * samples, max_error: worst, tolerance: 1e-3 }
}

pub fn run_all() -> Vec<OracleCheck> {
    vec![
        check_loop_hafnian(200, 11),
        check_permanent(3),
        check_fock_elements(23),
        check_eof_decompositions(2000, 5),
    ]
}
