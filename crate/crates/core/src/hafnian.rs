//! Loop hafnians and permanents.

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_abs, CMat, C64, ONE, ZERO};

/// Largest matrix handled by the subset recursion (memory is `16 * 2^n` bytes).
pub const MAX_DP_SIZE: usize = 24;

/// Loop hafnian of a symmetric matrix. The input is symmetrised after an
/// asymmetry check at relative tolerance `1e-10`.
pub fn loop_hafnian(m: &CMat) -> Result<C64> {
    if !m.is_square() {
        return invalid("loop hafnian needs a square matrix");
    }
    let scale = max_abs(m).max(1.0);
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-10 * scale {
        return invalid(format!("matrix is not symmetric (deviation {asym:.3e})"));
    }
    let sym = (m + m.transpose()).scale(0.5);
    lhaf_dp(&sym)
}

/// Subset recursion: with `i` the lowest index of `S`,
/// `f(S) = M_ii f(S\i) + sum_j M_ij f(S\{i,j})`.
pub fn lhaf_dp(m: &CMat) -> Result<C64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(ONE);
    }
    if n > MAX_DP_SIZE {
        return Err(Error::Resource(format!("loop hafnian of size {n} exceeds {MAX_DP_SIZE}")));
    }
    let size = 1usize << n;
    let mut f = vec![ZERO; size];
    f[0] = ONE;
    for mask in 1..size {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut acc = m[(i, i)] * f[rest];
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            acc += m[(i, j)] * f[rest & !(1 << j)];
            r &= r - 1;
        }
        f[mask] = acc;
    }
    Ok(f[size - 1])
}

/// Permanent by Glynn's formula with Gray-code ordering.
pub fn permanent(m: &CMat) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    match n {
        0 => return ONE,
        1 => return m[(0, 0)],
        2 => return m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => {}
    }
    let mut row_sums: Vec<C64> = (0..n).map(|j| (0..n).map(|i| m[(i, j)]).sum()).collect();
    let mut signs = vec![1i8; n];
    let mut total = row_sums.iter().product::<C64>();
    let mut parity = 1.0;
    let mut gray = 0usize;
    for k in 1..(1usize << (n - 1)) {
        let next = k ^ (k >> 1);
        let flip = (gray ^ next).trailing_zeros() as usize + 1;
        gray = next;
        signs[flip] = -signs[flip];
        let f = 2.0 * signs[flip] as f64;
        for (j, s) in row_sums.iter_mut().enumerate() {
            *s += m[(flip, j)] * f;
        }
        parity = -parity;
        total += row_sums.iter().product::<C64>() * parity;
    }
    total / (1u64 << (n - 1)) as f64
}

/// Loop hafnian that first splits the weighted graph into connected
/// components and evaluates loop-free bipartite components as permanents.
/// Entries with modulus below `zero_tol * max|M|` count as absent edges.
pub fn lhaf_structured(m: &CMat, zero_tol: f64) -> Result<C64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(ONE);
    }
    let cut = zero_tol * max_abs(m).max(1.0);
    let edge = |i: usize, j: usize| m[(i, j)].norm() > cut;
    let mut comp = vec![usize::MAX; n];
    let mut color = vec![0u8; n];
    let mut result = ONE;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut bipartite = true;
        let mut head = 0;
        while head < members.len() {
            let v = members[head];
            head += 1;
            if edge(v, v) {
                bipartite = false;
            }
            for w in 0..n {
                if w == v || !edge(v, w) {
                    continue;
                }
                if comp[w] == usize::MAX {
                    comp[w] = start;
                    color[w] = 1 - color[v];
                    members.push(w);
                } else if color[w] == color[v] {
                    bipartite = false;
                }
            }
        }
        members.sort_unstable();
        let value = if bipartite {
            let left: Vec<usize> = members.iter().copied().filter(|&v| color[v] == 0).collect();
            let right: Vec<usize> = members.iter().copied().filter(|&v| color[v] == 1).collect();
            if left.len() != right.len() {
                ZERO
            } else {
                permanent(&crate::linalg::select(m, &left, &right))
            }
        } else {
            lhaf_dp(&crate::linalg::select(m, &members, &members))?
        };
        if value == ZERO {
            return Ok(ZERO);
        }
        result *= value;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn small_cases() {
        assert_eq!(loop_hafnian(&CMat::zeros(0, 0)).unwrap(), ONE);
        let one = CMat::from_element(1, 1, c(0.3, -1.2));
        assert_eq!(loop_hafnian(&one).unwrap(), c(0.3, -1.2));
        let (a, b, d) = (c(1.5, 0.2), c(-0.7, 0.4), c(0.1, 2.0));
        let m = CMat::from_row_slice(2, 2, &[a, b, b, d]);
        assert!((loop_hafnian(&m).unwrap() - (a * d + b)).norm() < 1e-15);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = CMat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(loop_hafnian(&m).is_err());
    }

    #[test]
    fn permanent_of_all_ones() {
        for n in 0..7 {
            let p = permanent(&CMat::from_element(n, n, ONE));
            assert!((p.re - crate::linalg::factorial(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn structured_matches_dp_on_bipartite_graph() {
        let w = CMat::from_fn(3, 3, |i, j| c(0.3 * i as f64 - 0.2, 0.1 + 0.25 * j as f64));
        let mut m = CMat::zeros(6, 6);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, 3 + j)] = w[(i, j)];
                m[(3 + j, i)] = w[(i, j)];
            }
        }
        let dp = lhaf_dp(&m).unwrap();
        let fast = lhaf_structured(&m, 1e-13).unwrap();
        assert!((dp - fast).norm() < 1e-13);
        assert!((permanent(&w) - dp).norm() < 1e-13);
    }
}
