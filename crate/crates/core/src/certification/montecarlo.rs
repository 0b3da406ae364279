use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{CertificationReport, REPORT_SCHEMA};
use super::MeasuredCM;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::protocols::{classify, Bipartition};

pub const MIN_DRAWS: usize = 100;

/// Quantities tracked per draw: the six bipartition eigenvalues in
/// [`Bipartition::ALL`] order, then the nonclassicality μ.
pub const QUANTITIES: usize = 7;

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    /// Welford mean and sample standard deviation, in the given order.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let std = if n > 1 {
            (m2 / (n - 1) as f64).max(0.0).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryUncertainty {
    pub bipartition: Bipartition,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub draws: usize,
    pub seed: u64,
    pub entries: Vec<EntryUncertainty>,
    pub nonclassicality: Spread,
}

impl Uncertainty {
    pub fn entry(&self, b: Bipartition) -> &EntryUncertainty {
        self.entries
            .iter()
            .find(|e| e.bipartition == b)
            .expect("every bipartition is tracked")
    }

    fn from_samples(samples: &[[f64; QUANTITIES]], seed: u64) -> Self {
        let spread = |k: usize| Spread::of(samples.iter().map(|s| s[k]));
        let entries = Bipartition::ALL
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let s = spread(k);
                EntryUncertainty {
                    bipartition: b,
                    mean: s.mean,
                    std: s.std,
                }
            })
            .collect();
        Self {
            draws: samples.len(),
            seed,
            entries,
            nonclassicality: spread(QUANTITIES - 1),
        }
    }
}

fn quantities(cm: &CovarianceMatrix) -> Result<[f64; QUANTITIES]> {
    let mut out = [0.0; QUANTITIES];
    for (k, b) in Bipartition::ALL.iter().enumerate() {
        out[k] = b.min_eig(cm)?;
    }
    out[QUANTITIES - 1] = cm.nonclassicality();
    Ok(out)
}

fn draw_chunk(
    center: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    count: usize,
    seed: u64,
    chunk: u64,
) -> Result<Vec<[f64; QUANTITIES]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let d = center.nrows();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = center.clone();
        for i in 0..d {
            for j in i..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = center[(i, j)] + sigma[(i, j)] * z;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        out.push(quantities(&CovarianceMatrix::from_matrix(m)?)?);
    }
    Ok(out)
}

/// Per-draw quantities in draw order. Each upper-triangle element is
/// perturbed by an independent `N(0, σ_ij²)` and mirrored. Chunk `k` of 256
/// draws uses ChaCha stream `k` of `seed`, so results do not depend on how
/// many threads run.
pub fn monte_carlo_samples(
    m: &MeasuredCM,
    draws: usize,
    seed: u64,
) -> Result<Vec<[f64; QUANTITIES]>> {
    let sigma = m.sigma.as_ref().ok_or(Error::MissingSigma)?;
    if draws < MIN_DRAWS {
        return Err(Error::TooFewDraws {
            min: MIN_DRAWS,
            found: draws,
        });
    }
    if m.cm.n_modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            found: m.cm.n_modes(),
        });
    }
    let center = m.cm.matrix();
    let n_chunks = draws.div_ceil(CHUNK);
    let chunks = (0..n_chunks)
        .into_par_iter()
        .map(|k| draw_chunk(center, sigma, CHUNK.min(draws - k * CHUNK), seed, k as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Point estimate from the central matrix plus Monte Carlo spread.
pub fn monte_carlo_eigs(m: &MeasuredCM, draws: usize, seed: u64) -> Result<CertificationReport> {
    let samples = monte_carlo_samples(m, draws, seed)?;
    let mut report = certify(m)?;
    report.uncertainty = Some(Uncertainty::from_samples(&samples, seed));
    Ok(report)
}

/// Point estimate only.
pub fn certify(m: &MeasuredCM) -> Result<CertificationReport> {
    let separability = classify(&m.cm)?;
    let mut warnings = m.warnings.clone();
    warnings.extend(separability.warnings.iter().cloned());
    Ok(CertificationReport {
        schema: REPORT_SCHEMA.to_string(),
        label: m.label.clone(),
        separability,
        uncertainty: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certification::fixtures;

    #[test]
    fn zero_sigma_gives_exactly_zero_spread() {
        let m = fixtures::gamma1().with_uniform_sigma(0.0);
        let rep = monte_carlo_eigs(&m, 200, 3).unwrap();
        let u = rep.uncertainty.unwrap();
        for e in &u.entries {
            assert_eq!(e.std, 0.0);
            assert_eq!(e.mean, rep.separability.min_eig(e.bipartition));
        }
        assert_eq!(u.nonclassicality.std, 0.0);
    }

    #[test]
    fn requires_sigma_and_enough_draws() {
        let mut m = fixtures::gamma1();
        assert!(matches!(
            monte_carlo_eigs(&m, 50, 1),
            Err(Error::TooFewDraws {
                min: 100,
                found: 50
            })
        ));
        m.sigma = None;
        assert_eq!(
            monte_carlo_eigs(&m, 1000, 1).unwrap_err(),
            Error::MissingSigma
        );
    }

    #[test]
    fn point_estimate_independent_of_seed_and_draws() {
        let m = fixtures::gamma2();
        let a = monte_carlo_eigs(&m, 100, 1).unwrap();
        let b = monte_carlo_eigs(&m, 700, 99).unwrap();
        assert_eq!(a.separability, b.separability);
        assert_eq!(a.separability, classify(&m.cm).unwrap());
    }

    #[test]
    fn same_seed_same_samples() {
        let m = fixtures::gamma1();
        let a = monte_carlo_samples(&m, 600, 5).unwrap();
        let b = monte_carlo_samples(&m, 600, 5).unwrap();
        assert_eq!(a, b);
        // prefix property of the fixed chunking
        let c = monte_carlo_samples(&m, 300, 5).unwrap();
        assert_eq!(&a[..256], &c[..256]);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 2.5, -0.5, 4.0, 3.25];
        let s = Spread::of(xs);
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean - mean).abs() < 1e-15);
        assert!((s.std - var.sqrt()).abs() < 1e-15);
    }
}
