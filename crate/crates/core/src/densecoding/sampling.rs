//! Monte Carlo simulation of the decoding chain.
//!
//! Draws quadrature values of the resource state and classical signals,
//! pushes each realization through the physical steps one at a time, and
//! estimates signal and noise powers from the readouts. It shares only the
//! conventions with [`super::propagate`], not the algebra, and serves as an
//! independent check on it.

use nalgebra::{Cholesky, Matrix6, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{to_mat6, DecodingConfig};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

const CHUNK: usize = 1 << 16;

/// Estimated powers of one readout, in covariance-matrix units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledOutput {
    pub signal_power: f64,
    pub noise_power: f64,
}

impl SampledOutput {
    pub fn snr(&self) -> f64 {
        if self.signal_power == 0.0 {
            0.0
        } else {
            self.signal_power / self.noise_power
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledChain {
    pub samples: usize,
    pub x_output: SampledOutput,
    pub p_output: SampledOutput,
}

impl SampledChain {
    /// `½ln(1 + Ŝ_x/N̂_x) + ½ln(1 + Ŝ_p/N̂_p)`.
    pub fn capacity(&self) -> f64 {
        0.5 * self.x_output.snr().ln_1p() + 0.5 * self.p_output.snr().ln_1p()
    }
}

#[derive(Default, Clone, Copy)]
struct Sums {
    // per output: Σ o·u, Σ u², Σ o²
    x: [f64; 3],
    p: [f64; 3],
}

impl Sums {
    fn add(&mut self, other: &Sums) {
        for k in 0..3 {
            self.x[k] += other.x[k];
            self.p[k] += other.p[k];
        }
    }
}

fn simulate_chunk(
    chol: &Matrix6<f64>,
    config: &DecodingConfig,
    sigma_signal: f64,
    count: usize,
    seed: u64,
    chunk: u64,
) -> Sums {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let t1 = config.t1;
    let r1 = (1.0 - t1 * t1).max(0.0).sqrt();
    let t2 = config.t2;
    let r2 = (1.0 - t2 * t2).max(0.0).sqrt();
    let mut sums = Sums::default();
    for _ in 0..count {
        let z = Vector6::<f64>::from_fn(|_, _| StandardNormal.sample(&mut rng));
        let xi = chol * z;
        let u: f64 = StandardNormal.sample(&mut rng);
        let v: f64 = StandardNormal.sample(&mut rng);
        let (x0, p0) = (sigma_signal * u, sigma_signal * v);

        let (mut xa, mut pa) = (xi[0], xi[1]);
        let (xb, pb) = (xi[2], xi[3]);
        let (mut xc, mut pc) = (xi[4], xi[5]);

        xa += x0;
        pa += p0;
        if config.charlie_phase_flip {
            xc = -xc;
            pc = -pc;
        }
        let xb1 = t1 * xb + r1 * xc;
        let pb1 = t1 * pb + r1 * pc;
        let pc1 = r1 * pb - t1 * pc;
        let pbar = pc1;
        let pb2 = pb1 + config.g * pbar;
        let x_out = t2 * xa - r2 * xb1;
        let p_out = r2 * pa + t2 * pb2;

        sums.x[0] += x_out * x0;
        sums.x[1] += x0 * x0;
        sums.x[2] += x_out * x_out;
        sums.p[0] += p_out * p0;
        sums.p[1] += p0 * p0;
        sums.p[2] += p_out * p_out;
    }
    sums
}

fn estimate(s: &[f64; 3], n: f64, signal_variance: f64) -> SampledOutput {
    if s[1] == 0.0 {
        return SampledOutput {
            signal_power: 0.0,
            noise_power: 2.0 * s[2] / n,
        };
    }
    let slope = s[0] / s[1];
    let residual = (s[2] - slope * s[0]) / n;
    SampledOutput {
        signal_power: 2.0 * slope * slope * signal_variance,
        noise_power: 2.0 * residual,
    }
}

/// Simulates `samples` realizations of the chain. Work is split into fixed
/// chunks with per-chunk ChaCha streams and reduced in chunk order, so the
/// result depends only on `seed`, not on the thread count.
pub fn sample_chain(
    cm: &CovarianceMatrix,
    config: &DecodingConfig,
    samples: usize,
    seed: u64,
) -> Result<SampledChain> {
    if cm.n_modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            found: cm.n_modes(),
        });
    }
    config.validate()?;
    if samples == 0 {
        return Err(Error::TooFewDraws { min: 1, found: 0 });
    }
    // quadrature covariance is γ/2
    let chol = Cholesky::new(to_mat6(cm) * 0.5)
        .ok_or(Error::NotPositiveDefinite)?
        .l();
    let sigma_signal = config.signal_power.sqrt();
    let n_chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(samples - k * CHUNK);
            simulate_chunk(&chol, config, sigma_signal, count, seed, k as u64)
        })
        .collect();
    let mut total = Sums::default();
    for s in &partial {
        total.add(s);
    }
    let n = samples as f64;
    Ok(SampledChain {
        samples,
        x_output: estimate(&total.x, n, config.signal_power),
        p_output: estimate(&total.p, n, config.signal_power),
    })
}
