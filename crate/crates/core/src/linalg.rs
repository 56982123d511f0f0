//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry of `|U U^dagger - I|`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let p = u * u.adjoint() - identity(n);
    max_abs(&p)
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Unitary discrete Fourier transform, `U_jk = w^(jk)/sqrt(n)`.
pub fn dft(n: usize) -> CMat {
    let s = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |j, k| {
        let ph = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(s, ph)
    })
}

/// Symmetric 50:50 beamsplitter `[[1,1],[1,-1]]/sqrt(2)`.
pub fn beamsplitter() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Places `u` on the listed modes of an `n`-mode identity.
pub fn embed(u: &CMat, n: usize, modes: &[usize]) -> CMat {
    let mut w = identity(n);
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate() {
            w[(ma, mb)] = u[(a, b)];
        }
    }
    w
}

pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut w = CMat::zeros(n + m, n + m);
    w.view_mut((0, 0), (n, n)).copy_from(a);
    w.view_mut((n, n), (m, m)).copy_from(b);
    w
}

pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Permutation matrix sending mode `j` to mode `perm[j]`.
pub fn permutation(perm: &[usize]) -> CMat {
    let n = perm.len();
    let mut p = CMat::zeros(n, n);
    for (j, &t) in perm.iter().enumerate() {
        p[(t, j)] = ONE;
    }
    p
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues and rounding noise (below `1e-14` of the largest) are clipped to zero.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let floor = 1e-14 * vals.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&x| c(if x > floor { x.sqrt() } else { 0.0 }, 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `<v| m |v>` for a ket `v`.
pub fn expectation(m: &CMat, v: &CVec) -> C64 {
    (v.adjoint() * m * v)[(0, 0)]
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_is_unitary_with_flat_modulus() {
        for n in 1..8 {
            let u = dft(n);
            assert!(unitarity_deviation(&u) < 1e-13);
            for z in u.iter() {
                assert!((z.norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_and_permutation() {
        let w = embed(&beamsplitter(), 4, &[1, 3]);
        assert!(unitarity_deviation(&w) < 1e-15);
        assert_eq!(w[(0, 0)], ONE);
        let p = permutation(&[2, 0, 1]);
        let v = CVec::from_vec(vec![ONE, ZERO, ZERO]);
        assert_eq!((p * v)[2], ONE);
    }

    #[test]
    fn sqrt_of_projector_is_projector() {
        let v = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let p = projector(&v);
        assert!(max_abs(&(psd_sqrt(&p) - &p)) < 1e-12);
    }
}
