//! Eigenvalue helpers for the small dense matrices this crate works with.
//!
//! Hermitian matrices `A + iB` (A symmetric, B antisymmetric) are handled
//! through the real symmetric embedding `[[A, -B], [B, A]]`, whose spectrum
//! is that of `A + iB` with every eigenvalue doubled.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)[0]
}

/// Real 2d×2d embedding of the d×d Hermitian matrix `re + i·im`.
pub fn hermitian_embedding(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let d = re.nrows();
    debug_assert_eq!(im.shape(), (d, d));
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(re);
    out.view_mut((d, d), (d, d)).copy_from(re);
    out.view_mut((0, d), (d, d)).copy_from(&(-im));
    out.view_mut((d, 0), (d, d)).copy_from(im);
    out
}

/// Ascending eigenvalues of `re + i·im`, one per eigenvalue (the doubled
/// copies from the embedding are paired off).
pub fn hermitian_eigenvalues(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Vec<f64> {
    let doubled = symmetric_eigenvalues(&hermitian_embedding(re, im));
    doubled
        .chunks(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect()
}

pub fn min_hermitian_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    hermitian_eigenvalues(re, im)[0]
}

/// Smallest eigenvalue of `re + i·im` from nalgebra's complex Hermitian
/// solver. Slower than the embedding; kept as an independent check.
pub fn min_hermitian_eigenvalue_direct(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let h = DMatrix::from_fn(re.nrows(), re.ncols(), |r, c| {
        Complex::new(re[(r, c)], im[(r, c)])
    });
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
