//! Thin bridge between ndarray data and the nalgebra factorizations we need.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

pub(crate) fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Solve `a x = b` for symmetric positive-definite `a`.
/// Returns `None` when `a` is not numerically positive definite.
pub(crate) fn spd_solve(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Option<Array1<f64>> {
    let chol = spd_cholesky(a)?;
    let rhs = DVector::from_iterator(b.len(), b.iter().copied());
    let x = chol.solve(&rhs);
    Some(Array1::from_iter(x.iter().copied()))
}

/// Inverse of a symmetric positive-definite matrix.
pub(crate) fn spd_inverse(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    spd_cholesky(a).map(|c| from_dmatrix(&c.inverse()))
}

fn spd_cholesky(a: ArrayView2<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = to_dmatrix(a);
    let dim = m.nrows();
    let scale = (0..dim).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let chol = m.cholesky()?;
    // Reject near-singular factors; a tiny pivot relative to the diagonal means
    // the columns are collinear for all practical purposes.
    let l = chol.l_dirty();
    for i in 0..dim {
        if l[(i, i)] * l[(i, i)] <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
    }
    Some(chol)
}

/// Eigenvalues of a symmetric matrix, largest first.
pub fn symmetric_eigenvalues(a: ArrayView2<f64>) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(to_dmatrix(a));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Cross-product `a' b / n` for column-centered, unit-variance data.
pub(crate) fn cross_corr(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let n = a.nrows() as f64;
    a.t().dot(&b) / n
}
