//! Rank-revealing kernels and minimum-norm solves on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Orthonormal basis of `{v : m v = 0}`.
///
/// Columns are equilibrated before the SVD; a singular value counts as zero
/// when it is at most `rel_tol` times the largest one. The kernel of the
/// scaled matrix is mapped back and re-orthonormalised.
pub fn complex_nullspace(m: &DMatrix<Complex64>, rel_tol: f64) -> Vec<DVector<Complex64>> {
    let ncols = m.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..ncols)
            .map(|i| DVector::from_fn(ncols, |r, _| Complex64::new((r == i) as u8 as f64, 0.0)))
            .collect();
    }
    let scales: Vec<f64> = (0..ncols)
        .map(|j| {
            let n = m.column(j).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    let rows = m.nrows().max(ncols);
    let a = DMatrix::from_fn(rows, ncols, |i, j| {
        if i < m.nrows() {
            m[(i, j)] * scales[j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("V requested");
    let smax = svd.singular_values.max();
    let kernel: Vec<DVector<Complex64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= rel_tol * smax)
        .map(|(i, _)| DVector::from_fn(ncols, |r, _| v_t[(i, r)].conj() * scales[r]))
        .collect();
    orthonormalize(kernel)
}

/// Real counterpart of [`complex_nullspace`].
pub fn real_nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let ncols = m.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..ncols)
            .map(|i| DVector::from_fn(ncols, |r, _| (r == i) as u8 as f64))
            .collect();
    }
    let scales: Vec<f64> = (0..ncols)
        .map(|j| {
            let n = m.column(j).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    let rows = m.nrows().max(ncols);
    let a = DMatrix::from_fn(rows, ncols, |i, j| if i < m.nrows() { m[(i, j)] * scales[j] } else { 0.0 });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("V requested");
    let smax = svd.singular_values.max();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax == 0.0 || s <= rel_tol * smax {
            let mut v = DVector::from_fn(ncols, |r, _| v_t[(i, r)] * scales[r]);
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dot(&v);
                    v -= b * proj;
                }
            }
            let n = v.norm();
            if n > 0.0 {
                basis.push(v / n);
            }
        }
    }
    basis
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass.
pub fn orthonormalize(vs: Vec<DVector<Complex64>>) -> Vec<DVector<Complex64>> {
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(vs.len());
    for mut v in vs {
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let n = v.norm();
        if n > 1e-300 {
            basis.push(v / Complex64::new(n, 0.0));
        }
    }
    basis
}

/// Minimum-norm least-squares solution of `j x = rhs`.
pub fn min_norm_solve(j: &DMatrix<Complex64>, rhs: &DVector<Complex64>, rel_tol: f64) -> DVector<Complex64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (rel_tol * smax).max(1e-300);
    svd.solve(rhs, eps).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// Real counterpart of [`min_norm_solve`].
pub fn min_norm_solve_real(j: &DMatrix<f64>, rhs: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (rel_tol * smax).max(1e-300);
    svd.solve(rhs, eps).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// `max_i |(m v)_i|`
pub fn residual_inf(m: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    (m * v).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_by_four_example() {
        // a + b0 = 0, b1 = 0 over (a, b0, b1, b2)
        let m = DMatrix::from_row_slice(2, 4, &[c(1.0), c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0)]);
        let k = complex_nullspace(&m, 1e-9);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(residual_inf(&m, v) <= 1e-10);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v[2].norm() < 1e-14);
            assert!((v[0] + v[1]).norm() < 1e-14);
        }
        assert!(k[0].dotc(&k[1]).norm() < 1e-14);
    }

    #[test]
    fn empty_system_is_identity() {
        let m = DMatrix::<Complex64>::zeros(0, 3);
        assert_eq!(complex_nullspace(&m, 1e-9).len(), 3);
    }

    #[test]
    fn full_rank_has_trivial_kernel() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert!(complex_nullspace(&m, 1e-9).is_empty());
    }

    #[test]
    fn real_kernel() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let k = real_nullspace(&m, 1e-9);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!((&m * v).norm() < 1e-14);
        }
    }
}
