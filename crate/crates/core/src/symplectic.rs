//! Symplectic form and the Gaussian unitaries used by the protocols:
//! beam splitters, single-mode squeezers and phase shifts.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Quadrature axis of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    P,
}

impl Axis {
    /// Offset of this quadrature inside a mode's (x, p) pair.
    pub fn offset(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::P => 1,
        }
    }
}

/// The canonical form `Ω_n = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * n_modes, 2 * n_modes);
        for k in 0..n_modes {
            matrix[(2 * k, 2 * k + 1)] = 1.0;
            matrix[(2 * k + 1, 2 * k)] = -1.0;
        }
        Self { n_modes, matrix }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Real 2n×2n matrix `S` acting on covariance matrices as `γ → SγSᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wraps a matrix after checking `SΩSᵀ = Ω` to `tol`.
    pub fn from_matrix(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows % 2 != 0 {
            return Err(Error::OddDimension(rows));
        }
        let t = Self { matrix };
        if t.symplectic_defect() > tol {
            return Err(Error::NotSymplectic(t.symplectic_defect()));
        }
        Ok(t)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Beam splitter with amplitude transmissivity `t` between modes `i` and `j`:
    ///
    /// ```text
    /// out_i = t·in_i + √(1−t²)·in_j
    /// out_j = √(1−t²)·in_i − t·in_j
    /// ```
    ///
    /// identically on x and p.
    pub fn beamsplitter(i: usize, j: usize, t: f64, n_modes: usize) -> Result<Self> {
        check_mode(i, n_modes)?;
        check_mode(j, n_modes)?;
        if i == j {
            return Err(Error::SameMode(i));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidTransmissivity(t));
        }
        let r = (1.0 - t * t).max(0.0).sqrt();
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            m[(a, a)] = t;
            m[(a, b)] = r;
            m[(b, a)] = r;
            m[(b, b)] = -t;
        }
        Ok(Self { matrix: m })
    }

    /// Single-mode squeezer: `x → e^{−r}x, p → e^{r}p` for axis X, the
    /// conjugate for axis P.
    pub fn squeezer(mode: usize, r: f64, axis: Axis, n_modes: usize) -> Result<Self> {
        check_mode(mode, n_modes)?;
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (sx, sp) = match axis {
            Axis::X => ((-r).exp(), r.exp()),
            Axis::P => (r.exp(), (-r).exp()),
        };
        m[(2 * mode, 2 * mode)] = sx;
        m[(2 * mode + 1, 2 * mode + 1)] = sp;
        Ok(Self { matrix: m })
    }

    /// Phase rotation by `theta` on one mode.
    pub fn phase_shift(mode: usize, theta: f64, n_modes: usize) -> Result<Self> {
        check_mode(mode, n_modes)?;
        let (s, c) = theta.sin_cos();
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (x, p) = (2 * mode, 2 * mode + 1);
        m[(x, x)] = c;
        m[(x, p)] = s;
        m[(p, x)] = -s;
        m[(p, p)] = c;
        Ok(Self { matrix: m })
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SymplecticTransform) -> Result<Self> {
        if self.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: first.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }

    /// Largest entry of `|SΩSᵀ − Ω|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = SymplecticForm::new(self.n_modes());
        let lhs = &self.matrix * omega.matrix() * self.matrix.transpose();
        (lhs - omega.matrix()).amax()
    }
}

pub(crate) fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        Err(Error::ModeOutOfRange { mode, n_modes })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_squares_to_minus_identity() {
        let omega = SymplecticForm::new(3);
        let m = omega.matrix();
        assert_eq!(m.transpose(), -m);
        assert_eq!(m * m, -DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn generators_are_symplectic_with_unit_determinant() {
        let gens = [
            SymplecticTransform::beamsplitter(0, 2, 0.3, 3).unwrap(),
            SymplecticTransform::beamsplitter(2, 1, 1.0, 3).unwrap(),
            SymplecticTransform::squeezer(1, 0.7, Axis::P, 3).unwrap(),
            SymplecticTransform::phase_shift(0, 1.1, 3).unwrap(),
        ];
        for s in &gens {
            assert!(s.symplectic_defect() < 1e-12);
            assert!((s.matrix().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_transmission_passes_mode_i_and_flips_mode_j() {
        let s = SymplecticTransform::beamsplitter(0, 1, 1.0, 2).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert_eq!(s.matrix(), &want);
    }

    #[test]
    fn beamsplitter_rejects_bad_arguments() {
        assert_eq!(
            SymplecticTransform::beamsplitter(0, 1, 1.2, 2).unwrap_err(),
            Error::InvalidTransmissivity(1.2)
        );
        assert_eq!(
            SymplecticTransform::beamsplitter(1, 1, 0.5, 2).unwrap_err(),
            Error::SameMode(1)
        );
        assert!(matches!(
            SymplecticTransform::beamsplitter(0, 3, 0.5, 2),
            Err(Error::ModeOutOfRange {
                mode: 3,
                n_modes: 2
            })
        ));
    }

    #[test]
    fn from_matrix_rejects_non_symplectic() {
        let m = DMatrix::from_diagonal_element(2, 2, 2.0);
        assert!(SymplecticTransform::from_matrix(m, 1e-12).is_err());
    }
}
