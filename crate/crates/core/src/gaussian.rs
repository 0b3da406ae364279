//! Covariance matrices of zero-mean Gaussian states.
//!
//! Conventions: quadratures are ordered `(x₁, p₁, …, xₙ, pₙ)` and the
//! matrix is `γ_jk = ⟨ξ_j ξ_k + ξ_k ξ_j⟩`, so the vacuum is the identity and
//! a quadrature with variance `V` contributes `2V` on the diagonal.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{check_mode, Axis, SymplecticForm, SymplecticTransform};

/// Tolerance below zero still accepted as physical in `γ + iΩ ≥ 0`.
pub const DEFAULT_PHYSICALITY_TOL: f64 = 1e-9;

const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape, symmetry (relative 1e-12) and positive diagonal.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 || rows % 2 != 0 {
            return Err(Error::OddDimension(rows));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_RTOL * matrix.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        for (index, &value) in matrix.diagonal().iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositiveDiagonal { index, value });
            }
        }
        Ok(Self {
            n_modes: rows / 2,
            matrix: linalg::symmetrize(&matrix),
        })
    }

    /// Row-major convenience constructor.
    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "a state needs at least one mode");
        Self {
            n_modes,
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode squeezed vacuum; axis X gives `diag(e^{−2r}, e^{2r})`.
    /// Negative `r` squeezes the conjugate quadrature.
    pub fn squeezed_vacuum(r: f64, axis: Axis) -> Self {
        let (vx, vp) = match axis {
            Axis::X => ((-2.0 * r).exp(), (2.0 * r).exp()),
            Axis::P => ((2.0 * r).exp(), (-2.0 * r).exp()),
        };
        Self {
            n_modes: 1,
            matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![vx, vp])),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `SγSᵀ`, symmetrized.
    pub fn apply(&self, s: &SymplecticTransform) -> Result<Self> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.dim(),
            });
        }
        let m = s.matrix() * &self.matrix * s.matrix().transpose();
        Ok(Self {
            n_modes: self.n_modes,
            matrix: linalg::symmetrize(&m),
        })
    }

    /// Adds a correlated classical displacement: `γ + 2V·wwᵀ`.
    pub fn inject_noise(&self, noise: &NoiseInjection) -> Result<Self> {
        if noise.weights.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: noise.weights.len(),
            });
        }
        let w = &noise.weights;
        let m = &self.matrix + (w * w.transpose()) * (2.0 * noise.variance);
        Ok(Self {
            n_modes: self.n_modes,
            matrix: linalg::symmetrize(&m),
        })
    }

    /// Block-diagonal product state; `other`'s modes follow `self`'s.
    pub fn tensor(&self, other: &CovarianceMatrix) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(&self.matrix);
        m.view_mut((d1, d1), (d2, d2)).copy_from(&other.matrix);
        Self {
            n_modes: self.n_modes + other.n_modes,
            matrix: m,
        }
    }

    /// Reduced state on `modes_kept`, in the order given.
    pub fn partial_trace(&self, modes_kept: &[usize]) -> Result<Self> {
        self.check_mode_set(modes_kept, false)?;
        let idx: Vec<usize> = modes_kept
            .iter()
            .flat_map(|&m| [2 * m, 2 * m + 1])
            .collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])]);
        Ok(Self {
            n_modes: modes_kept.len(),
            matrix: m,
        })
    }

    /// `Λ_J γ Λ_J` where `Λ_J` flips the momentum of every mode in `modes`.
    pub fn partial_transpose(&self, modes: &[usize]) -> Result<DMatrix<f64>> {
        for &m in modes {
            check_mode(m, self.n_modes)?;
        }
        let mut sign = DVector::from_element(self.dim(), 1.0);
        for &m in modes {
            sign[2 * m + 1] = -1.0;
        }
        Ok(DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            sign[r] * sign[c] * self.matrix[(r, c)]
        }))
    }

    /// Minimum eigenvalue of `γ^{(T_J)} + iΩ`. Negative means entangled
    /// across `J | rest`.
    pub fn min_eig_ppt(&self, partition: &[usize]) -> Result<f64> {
        self.check_mode_set(partition, true)?;
        let transposed = self.partial_transpose(partition)?;
        let omega = SymplecticForm::new(self.n_modes);
        Ok(linalg::min_hermitian_eigenvalue(
            &transposed,
            omega.matrix(),
        ))
    }

    /// Minimum eigenvalue of `γ + iΩ`; physical states have it ≥ 0.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let omega = SymplecticForm::new(self.n_modes);
        linalg::min_hermitian_eigenvalue(&self.matrix, omega.matrix())
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_uncertainty_eigenvalue() >= -tol
    }

    /// `μ = min eig(γ)`; `μ < 1` means nonclassical.
    pub fn nonclassicality(&self) -> f64 {
        linalg::min_symmetric_eigenvalue(&self.matrix)
    }

    /// Mean photon number of `mode` with an added classical signal of
    /// variance `signal_power` on each quadrature.
    pub fn photon_number(&self, mode: usize, signal_power: f64) -> Result<f64> {
        check_mode(mode, self.n_modes)?;
        if !(signal_power >= 0.0) {
            return Err(Error::NegativeSignalPower(signal_power));
        }
        let (x, p) = (2 * mode, 2 * mode + 1);
        Ok((self.matrix[(x, x)] + self.matrix[(p, p)]) / 4.0 - 0.5 + signal_power)
    }

    /// Sign-flips both quadratures of `mode` (a π phase shift), exactly.
    pub fn flip_mode(&self, mode: usize) -> Result<Self> {
        check_mode(mode, self.n_modes)?;
        let flipped = |i: usize| i / 2 == mode;
        let m = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if flipped(r) ^ flipped(c) {
                -self.matrix[(r, c)]
            } else {
                self.matrix[(r, c)]
            }
        });
        Ok(Self {
            n_modes: self.n_modes,
            matrix: m,
        })
    }

    fn check_mode_set(&self, modes: &[usize], proper: bool) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::InvalidModeSet("empty mode set".into()));
        }
        let mut seen = vec![false; self.n_modes];
        for &m in modes {
            check_mode(m, self.n_modes)?;
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidModeSet(format!("mode {m} listed twice")));
            }
        }
        if proper && modes.len() == self.n_modes {
            return Err(Error::InvalidModeSet(
                "partition must leave at least one mode on the other side".into(),
            ));
        }
        Ok(())
    }
}

/// Correlated classical Gaussian displacement `ξ → ξ + w·d`, `d ~ N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseInjection {
    weights: DVector<f64>,
    variance: f64,
}

impl NoiseInjection {
    pub fn new(weights: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::NegativeVariance(variance));
        }
        Ok(Self {
            weights: DVector::from_vec(weights),
            variance,
        })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_is_identity_and_saturates_uncertainty() {
        assert_eq!(
            CovarianceMatrix::vacuum(1).matrix(),
            &DMatrix::identity(2, 2)
        );
        assert_eq!(
            CovarianceMatrix::vacuum(3).matrix(),
            &DMatrix::identity(6, 6)
        );
        assert_abs_diff_eq!(
            CovarianceMatrix::vacuum(1).min_uncertainty_eigenvalue(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn squeezed_vacuum_values() {
        assert_eq!(
            CovarianceMatrix::squeezed_vacuum(0.0, Axis::X),
            CovarianceMatrix::vacuum(1)
        );
        let sq = CovarianceMatrix::squeezed_vacuum(0.5, Axis::X);
        assert_abs_diff_eq!(sq.matrix()[(0, 0)], 0.36788, epsilon = 1e-5);
        assert_abs_diff_eq!(sq.matrix()[(1, 1)], 1f64.exp(), epsilon = 1e-12);
        let sp = CovarianceMatrix::squeezed_vacuum(0.5, Axis::P);
        assert_abs_diff_eq!(sp.matrix()[(0, 0)], 1f64.exp(), epsilon = 1e-12);
        // negative r squeezes the other axis
        assert_eq!(CovarianceMatrix::squeezed_vacuum(-0.5, Axis::X), sp);
    }

    #[test]
    fn photon_number_definitions() {
        let v = CovarianceMatrix::vacuum(1);
        assert_eq!(v.photon_number(0, 0.0).unwrap(), 0.0);
        assert_eq!(v.photon_number(0, 1.0).unwrap(), 1.0);
        for r in [0.1, 0.5, 1.3] {
            let n = CovarianceMatrix::squeezed_vacuum(r, Axis::X)
                .photon_number(0, 0.0)
                .unwrap();
            assert_abs_diff_eq!(n, r.sinh().powi(2), epsilon = 1e-12);
        }
        assert!(v.photon_number(1, 0.0).is_err());
        assert!(v.photon_number(0, -0.1).is_err());
    }

    #[test]
    fn noise_injection_rank_one_update() {
        let v2 = CovarianceMatrix::vacuum(2);
        let noise = NoiseInjection::new(vec![1.0, 0.0, 1.0, 0.0], 0.5).unwrap();
        let out = v2.inject_noise(&noise).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(out.matrix(), &want);

        let zero = NoiseInjection::new(vec![1.0, 0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(v2.inject_noise(&zero).unwrap(), v2);
        assert_eq!(
            NoiseInjection::new(vec![1.0], -0.1).unwrap_err(),
            Error::NegativeVariance(-0.1)
        );
        assert!(matches!(
            v2.inject_noise(&NoiseInjection::new(vec![1.0, 0.0], 1.0).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn displacement_destroys_squeezing_exactly() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let sq = CovarianceMatrix::squeezed_vacuum(r, Axis::X);
            let v1 = (1.0 - (-2.0 * r).exp()) / 2.0;
            let out = sq
                .inject_noise(&NoiseInjection::new(vec![1.0, 0.0], v1).unwrap())
                .unwrap();
            assert_abs_diff_eq!(out.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(out.nonclassicality(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_and_partial_trace() {
        let sq = CovarianceMatrix::squeezed_vacuum(0.4, Axis::P);
        let v = CovarianceMatrix::vacuum(1);
        assert_eq!(
            v.tensor(&CovarianceMatrix::vacuum(2)),
            CovarianceMatrix::vacuum(3)
        );
        let prod = sq.tensor(&v);
        assert_eq!(prod.matrix()[(0, 0)], sq.matrix()[(0, 0)]);
        assert_eq!(prod.matrix()[(2, 2)], 1.0);
        assert_eq!(prod.matrix()[(0, 2)], 0.0);
        let a = sq.tensor(&v).tensor(&sq);
        let b = sq.tensor(&v.tensor(&sq));
        assert_eq!(a, b);

        assert_eq!(a.partial_trace(&[0, 1, 2]).unwrap(), a);
        assert_eq!(a.partial_trace(&[0]).unwrap(), sq);
        assert_eq!(a.partial_trace(&[1]).unwrap(), v);
        assert!(a.partial_trace(&[]).is_err());
        assert!(a.partial_trace(&[3]).is_err());
        assert!(a.partial_trace(&[1, 1]).is_err());
    }

    #[test]
    fn partial_trace_preserves_requested_order() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 0)] = 2.0;
        m[(2, 2)] = 3.0;
        let cm = CovarianceMatrix::from_matrix(m).unwrap();
        let swapped = cm.partial_trace(&[1, 0]).unwrap();
        assert_eq!(swapped.matrix()[(0, 0)], 3.0);
        assert_eq!(swapped.matrix()[(2, 2)], 2.0);
    }

    #[test]
    fn partial_transpose_flips_momentum_row_and_column() {
        let mut m = DMatrix::from_element(4, 4, 0.1);
        m.fill_diagonal(2.0);
        let cm = CovarianceMatrix::from_matrix(m.clone()).unwrap();
        let t = cm.partial_transpose(&[0]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let flipped = (r == 1) ^ (c == 1);
                let want = if flipped { -m[(r, c)] } else { m[(r, c)] };
                assert_eq!(t[(r, c)], want);
            }
        }
        let twice = CovarianceMatrix::from_matrix(t)
            .unwrap()
            .partial_transpose(&[0])
            .unwrap();
        assert_eq!(twice, m);
    }

    #[test]
    fn ppt_of_vacuum_is_zero_and_partition_validated() {
        let v = CovarianceMatrix::vacuum(2);
        assert_abs_diff_eq!(v.min_eig_ppt(&[0]).unwrap(), 0.0, epsilon = 1e-14);
        assert!(v.min_eig_ppt(&[]).is_err());
        assert!(v.min_eig_ppt(&[0, 1]).is_err());
    }

    #[test]
    fn from_matrix_validation() {
        assert!(matches!(
            CovarianceMatrix::from_matrix(DMatrix::identity(3, 3)),
            Err(Error::OddDimension(3))
        ));
        let mut asym = DMatrix::identity(2, 2);
        asym[(0, 1)] = 0.1;
        assert!(matches!(
            CovarianceMatrix::from_matrix(asym),
            Err(Error::NotSymmetric(_))
        ));
        let mut neg = DMatrix::identity(2, 2);
        neg[(1, 1)] = -1.0;
        assert!(matches!(
            CovarianceMatrix::from_matrix(neg),
            Err(Error::NonPositiveDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn nonclassicality_of_diagonal_states() {
        assert_eq!(CovarianceMatrix::vacuum(2).nonclassicality(), 1.0);
        let r: f64 = 0.8;
        assert_abs_diff_eq!(
            CovarianceMatrix::squeezed_vacuum(r, Axis::X).nonclassicality(),
            (-2.0 * r).exp(),
            epsilon = 1e-14
        );
    }
}
