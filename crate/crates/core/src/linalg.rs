//! Small dense helpers shared by the model, filter and oracle code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric within `sym_tol` (scaled by the matrix magnitude) and no
/// eigenvalue below `-eig_tol` (also scaled).
pub fn is_psd(m: &DMatrix<f64>, sym_tol: f64, eig_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    asymmetry(m) <= sym_tol * scale && min_eigenvalue(m) >= -eig_tol * scale
}

pub fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Cholesky::new(m.clone())
}

/// Factor `L` with `L Lᵀ = m` for a symmetric PSD matrix.
///
/// Uses Cholesky when `m` is positive definite and an eigen square root
/// otherwise, so singular covariances such as `Q = 0` are accepted.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 1 {
        return DMatrix::from_element(1, 1, m[(0, 0)].max(0.0).sqrt());
    }
    if let Some(ch) = cholesky(m) {
        return ch.l();
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let root = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&root)
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
