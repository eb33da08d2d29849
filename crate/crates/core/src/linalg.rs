//! Small Hermitian linear-algebra helpers on top of nalgebra.
//!
//! Metric matrices are stored as `H[i][j] = h_{i\bar j}`, so the squared norm of a
//! (1,0)-vector `X` is `X^T H conj(X) = X^* conj(H) X`. Functions that work with
//! vectors take that convention into account; pure eigenvalue routines do not need to.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{PinchError, Result};
use crate::C64;

/// Largest entrywise deviation `|M - M^*|`.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M^*) / 2` together with the size of the correction applied.
pub fn symmetrize(m: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let corr = (&sym - m).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    (sym, corr)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition with eigenvalues sorted ascending; column `k` of the
/// returned matrix is the eigenvector for eigenvalue `k`.
pub fn hermitian_eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Smallest eigenvalue; errors if `m` is not Hermitian within `tol` or not positive definite.
pub fn min_eigenvalue_checked(m: &DMatrix<C64>, tol: f64) -> Result<f64> {
    let dev = hermitian_deviation(m);
    if dev > tol {
        return Err(PinchError::NotHermitian { deviation: dev });
    }
    let (sym, _) = symmetrize(m);
    let lo = hermitian_eigenvalues(&sym)[0];
    if !(lo > 0.0) {
        return Err(PinchError::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(lo)
}

/// Spectral condition number of a positive-definite Hermitian matrix.
pub fn condition_number(m: &DMatrix<C64>) -> f64 {
    let ev = hermitian_eigenvalues(m);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn cholesky(m: &DMatrix<C64>) -> Result<Cholesky<C64, nalgebra::Dyn>> {
    let (sym, _) = symmetrize(m);
    match Cholesky::new(sym.clone()) {
        Some(c) => Ok(c),
        None => Err(PinchError::NotPositiveDefinite {
            min_eigenvalue: hermitian_eigenvalues(&sym)[0],
        }),
    }
}

/// Extreme eigenvalues `(min, max)` of the Hermitian-definite pencil `a v = λ b v`.
///
/// Reduction: `b = L L^*`, then the eigenvalues of `L^{-1} a L^{-*}`.
pub fn pencil_extremes(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<(f64, f64)> {
    let ev = pencil_eigenvalues(a, b)?;
    Ok((ev[0], ev[ev.len() - 1]))
}

pub fn pencil_eigenvalues(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<Vec<f64>> {
    let chol = cholesky(b)?;
    let l = chol.l();
    let n = a.nrows();
    let (a_sym, _) = symmetrize(a);
    // L^{-1} A L^{-*} via two triangular solves.
    let y = l
        .solve_lower_triangular(&a_sym)
        .ok_or(PinchError::IllConditioned { condition: f64::INFINITY })?;
    let m = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(PinchError::IllConditioned { condition: f64::INFINITY })?;
    let (m, _) = symmetrize(&m);
    debug_assert_eq!(m.nrows(), n);
    Ok(hermitian_eigenvalues(&m))
}

/// Squared norm `h(X, \bar X) = Σ h_{i\bar j} X_i \bar X_j`.
pub fn form_norm_sq(h: &DMatrix<C64>, x: &[C64]) -> f64 {
    let n = x.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += h[(i, j)] * x[i] * x[j].conj();
        }
    }
    acc.re
}

/// Columns form an `h`-unitary frame: `P^* conj(H) P = I`, so `‖P x‖_h = |x|`.
pub fn unitary_frame(h: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let chol = cholesky(&h.map(|z| z.conj()))?;
    let l = chol.l();
    let n = h.nrows();
    let l_adj = l.adjoint();
    l_adj
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(PinchError::IllConditioned { condition: f64::INFINITY })
}

pub fn to_dvector(x: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pencil_of_proportional_forms_is_constant() {
        let b = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let a = &b * c(3.0, 0.0);
        let ev = pencil_eigenvalues(&a, &b).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(4.0, 0.0)]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0, 0.0), c(5.0, 0.0)]));
        let (lo, hi) = pencil_extremes(&a, &b).unwrap();
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 0.8).abs() < 1e-14);
    }

    #[test]
    fn frame_is_unitary_for_the_form() {
        let h = DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.4, 1.1), c(0.4, -1.1), c(2.0, 0.0)]);
        let p = unitary_frame(&h).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let xa: Vec<C64> = p.column(a).iter().copied().collect();
                let xb: Vec<C64> = p.column(b).iter().copied().collect();
                let mut ip = c(0.0, 0.0);
                for i in 0..2 {
                    for j in 0..2 {
                        ip += h[(i, j)] * xa[i] * xb[j].conj();
                    }
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(min_eigenvalue_checked(&m, 1e-12), Err(PinchError::NotHermitian { .. })));
    }
}
