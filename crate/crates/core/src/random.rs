//! Random physical states and symplectic maps for tests and the
//! invariant checks.

use nalgebra::DMatrix;
use rand::Rng;

use crate::gaussian::{CovarianceMatrix, NoiseInjection};
use crate::symplectic::{Axis, SymplecticTransform};

/// Product of `2 + n` layers, each a squeezer and phase shift on every mode
/// followed by a beam splitter on a random pair.
pub fn random_symplectic<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> SymplecticTransform {
    let mut s = SymplecticTransform::identity(n_modes);
    for _ in 0..2 + n_modes {
        for mode in 0..n_modes {
            let axis = if rng.random_bool(0.5) {
                Axis::X
            } else {
                Axis::P
            };
            let sq = SymplecticTransform::squeezer(mode, rng.random_range(0.0..1.2), axis, n_modes)
                .expect("valid squeezer");
            s = sq.after(&s).expect("dimensions agree");
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let ph = SymplecticTransform::phase_shift(mode, theta, n_modes).expect("valid phase");
            s = ph.after(&s).expect("dimensions agree");
        }
        if n_modes >= 2 {
            let i = rng.random_range(0..n_modes);
            let j = (i + rng.random_range(1..n_modes)) % n_modes;
            let bs = SymplecticTransform::beamsplitter(i, j, rng.random_range(0.0..=1.0), n_modes)
                .expect("valid beam splitter");
            s = bs.after(&s).expect("dimensions agree");
        }
    }
    s
}

/// Thermal state with occupations ν ∈ [1, 3].
pub fn random_thermal<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> CovarianceMatrix {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        let nu = rng.random_range(1.0..3.0);
        m[(2 * k, 2 * k)] = nu;
        m[(2 * k + 1, 2 * k + 1)] = nu;
    }
    CovarianceMatrix::from_matrix(m).expect("diagonal thermal state")
}

/// Random physical state: a thermal state through [`random_symplectic`],
/// then (half the time) classical noise along a random direction.
pub fn random_physical_cm<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> CovarianceMatrix {
    let s = random_symplectic(n_modes, rng);
    let mut cm = random_thermal(n_modes, rng)
        .apply(&s)
        .expect("dimensions agree");
    if rng.random_bool(0.5) {
        let w: Vec<f64> = (0..2 * n_modes)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let noise = NoiseInjection::new(w, rng.random_range(0.0..0.5)).expect("nonnegative");
        cm = cm.inject_noise(&noise).expect("dimensions agree");
    }
    cm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_are_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for _ in 0..25 {
                let cm = random_physical_cm(n, &mut rng);
                assert_eq!(cm.n_modes(), n);
                assert!(cm.min_uncertainty_eigenvalue() > -1e-9);
            }
        }
    }

    #[test]
    fn maps_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=4 {
            assert!(random_symplectic(n, &mut rng).symplectic_defect() < 1e-9);
        }
    }
}
