//! Small dense-Hermitian helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Columns of the returned matrix are the corresponding orthonormal
/// eigenvectors. The input is symmetrized as (m + m†)/2 first, so callers
/// may pass matrices that are Hermitian only up to rounding.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = hermitize(m);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&j| se.eigenvalues[j]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let h = hermitize(m);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// (m + m†)/2.
pub fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius norm.
pub fn fro_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖a - b‖_F.
pub fn fro_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    fro_norm(&(a - b))
}

/// ‖m - m†‖_F.
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    fro_distance(m, &m.adjoint())
}

/// ‖m² - m‖_F, zero iff m is idempotent.
pub fn projector_deviation(m: &DMatrix<C64>) -> f64 {
    fro_distance(&(m * m), m)
}

/// Validates that `m` is Hermitian and idempotent within `tol`.
pub fn check_projector(m: &DMatrix<C64>, tol: f64) -> Result<()> {
    let herm = hermiticity_deviation(m);
    if herm > tol {
        return Err(Error::Validation(format!(
            "matrix is not hermitian: ‖P - P†‖_F = {herm:.3e} (tol {tol:.1e})"
        )));
    }
    let dev = projector_deviation(m);
    if dev > tol {
        return Err(Error::NotAProjector {
            deviation: dev,
            tol,
        });
    }
    Ok(())
}

/// Orthogonal projector onto the span of the given eigenvector columns.
pub fn projector_from_columns(vectors: &DMatrix<C64>, columns: &[usize]) -> DMatrix<C64> {
    let n = vectors.nrows();
    let mut p = DMatrix::zeros(n, n);
    for &j in columns {
        let v = vectors.column(j);
        for r in 0..n {
            for c in 0..n {
                p[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    p
}

/// Trace norm Σ|λ_i| of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}
