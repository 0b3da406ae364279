//! Collaborative dense coding over a three-mode state (A, B, C).
//!
//! Alice displaces mode A by classical signals `(x₀, p₀)` and sends it to
//! Bob. Bob mixes his mode B with Charlie's mode C on UBS1, measures `p` of
//! the C output and feeds the outcome forward onto `p` of B with gain `g`,
//! then mixes A with B on UBS2 and reads `x` on the A output and `p` on the
//! B output. Every step is linear, so each readout is an exact linear
//! combination of the signals and of the state's six quadratures.
//!
//! Signal-to-noise ratios are dimensionless, so the vacuum normalization of
//! the covariance matrix cancels as long as signal and noise are expressed
//! in the same units: a signal of quadrature variance `P` contributes `2P`
//! in covariance-matrix units.

mod optimize;
pub mod sampling;

pub use optimize::{
    capacity_sweep, find_crossing, optimize_capacity, optimize_capacity_with, sweep_csv, Baseline,
    Crossing, DecoderSpace, OptimizerSettings, SweepRow, CROSSING_EPS, SWEEP_CSV_HEADER,
};

use nalgebra::{Matrix6, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::protocols::{Party, ProtocolId};

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    /// Amplitude transmissivity of UBS1 (B, C).
    pub t1: f64,
    /// Amplitude transmissivity of UBS2 (A, B).
    pub t2: f64,
    /// Feed-forward gain from the `p` readout of C onto `p` of B.
    pub g: f64,
    /// Signal variance per quadrature (vacuum quadrature variance is 1/2).
    pub signal_power: f64,
    /// π phase shift on C before UBS1.
    #[serde(default)]
    pub charlie_phase_flip: bool,
}

impl DecodingConfig {
    pub fn new(t1: f64, t2: f64, g: f64, signal_power: f64) -> Result<Self> {
        let cfg = Self {
            t1,
            t2,
            g,
            signal_power,
            charlie_phase_flip: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_phase_flip(mut self, flip: bool) -> Self {
        self.charlie_phase_flip = flip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.t1, self.t2] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidTransmissivity(t));
            }
        }
        if !(self.signal_power >= 0.0) {
            return Err(Error::NegativeSignalPower(self.signal_power));
        }
        if !self.g.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "gain must be finite, got {}",
                self.g
            )));
        }
        Ok(())
    }
}

/// One measured output: coefficients of `(x₀, p₀)` and of the six state
/// quadratures `(x_A, p_A, x_B, p_B, x_C, p_C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputDecomposition {
    pub signal_coeffs: [f64; 2],
    pub noise_vector: [f64; 6],
}

impl OutputDecomposition {
    /// `vᵀγv`, the noise variance in covariance-matrix units.
    pub fn noise_power(&self, cm: &CovarianceMatrix) -> f64 {
        quad(&self.noise_vector, &to_mat6(cm), &self.noise_vector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableDecomposition {
    /// `x` measured on the A output of UBS2; carries `x₀`.
    pub x_output: OutputDecomposition,
    /// `p` measured on the B output of UBS2; carries `p₀`.
    pub p_output: OutputDecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Nats per channel use.
    pub capacity: f64,
    pub snr_x: f64,
    pub snr_p: f64,
    pub config: DecodingConfig,
    /// Mean photon number of the transmitted mode, signal included.
    pub nbar: f64,
    /// Squeezing parameter of the resource state, when it was optimized.
    pub squeezing: Option<f64>,
    pub protocol: Option<ProtocolId>,
}

/// Capacities of coherent-state (heterodyne) and squeezed-state (homodyne)
/// communication at the same mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub coherent: f64,
    pub squeezed: f64,
}

pub fn baseline_capacities(nbar: f64) -> Result<Baselines> {
    check_nbar(nbar)?;
    Ok(Baselines {
        coherent: nbar.ln_1p(),
        squeezed: (2.0 * nbar).ln_1p(),
    })
}

pub(crate) fn check_nbar(nbar: f64) -> Result<()> {
    if nbar >= 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPhotonNumber(nbar))
    }
}

// Rows are quadratures (x_A, p_A, x_B, p_B, x_C, p_C); columns are the six
// input quadratures followed by x₀ and p₀.
type Chain = SMatrix<f64, 6, 8>;

fn mix(chain: &mut Chain, i: usize, j: usize, t: f64, r: f64) {
    // out_i = t·i + r·j, out_j = r·i − t·j on both quadratures
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        for col in 0..8 {
            let (u, w) = (chain[(a, col)], chain[(b, col)]);
            chain[(a, col)] = t * u + r * w;
            chain[(b, col)] = r * u - t * w;
        }
    }
}

fn negate_mode(chain: &mut Chain, mode: usize) {
    for q in 0..2 {
        for col in 0..8 {
            chain[(2 * mode + q, col)] = -chain[(2 * mode + q, col)];
        }
    }
}

fn run_chain(config: &DecodingConfig) -> Chain {
    let mut chain = Chain::zeros();
    for k in 0..6 {
        chain[(k, k)] = 1.0;
    }
    // encoding
    chain[(2 * A, 6)] = 1.0;
    chain[(2 * A + 1, 7)] = 1.0;
    if config.charlie_phase_flip {
        negate_mode(&mut chain, C);
    }
    let r1 = (1.0 - config.t1 * config.t1).max(0.0).sqrt();
    mix(&mut chain, B, C, config.t1, r1);
    // homodyne p on C, fed forward onto p of B
    for col in 0..8 {
        chain[(2 * B + 1, col)] += config.g * chain[(2 * C + 1, col)];
    }
    // UBS2: A_out = t2·A − r2·B, B_out = r2·A + t2·B
    let r2 = (1.0 - config.t2 * config.t2).max(0.0).sqrt();
    mix(&mut chain, B, A, config.t2, r2);
    negate_mode(&mut chain, A);
    chain
}

fn output_row(chain: &Chain, row: usize) -> OutputDecomposition {
    let mut noise_vector = [0.0; 6];
    for (k, v) in noise_vector.iter_mut().enumerate() {
        *v = chain[(row, k)];
    }
    OutputDecomposition {
        signal_coeffs: [chain[(row, 6)], chain[(row, 7)]],
        noise_vector,
    }
}

fn decompose(config: &DecodingConfig) -> ObservableDecomposition {
    let chain = run_chain(config);
    ObservableDecomposition {
        x_output: output_row(&chain, 2 * A),
        p_output: output_row(&chain, 2 * B + 1),
    }
}

/// Exact linear decomposition of both readouts.
pub fn propagate(
    cm: &CovarianceMatrix,
    config: &DecodingConfig,
) -> Result<ObservableDecomposition> {
    if cm.n_modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            found: cm.n_modes(),
        });
    }
    config.validate()?;
    Ok(decompose(config))
}

pub(crate) fn to_mat6(cm: &CovarianceMatrix) -> Matrix6<f64> {
    debug_assert_eq!(cm.dim(), 6);
    Matrix6::from_fn(|r, c| cm.matrix()[(r, c)])
}

fn quad(v: &[f64; 6], m: &Matrix6<f64>, w: &[f64; 6]) -> f64 {
    let mut acc = 0.0;
    for r in 0..6 {
        let mut row = 0.0;
        for c in 0..6 {
            row += m[(r, c)] * w[c];
        }
        acc += v[r] * row;
    }
    acc
}

/// Signal and noise power of one readout in covariance-matrix units. The
/// wanted signal is `signal_index` (0 for `x₀`, 1 for `p₀`); the other
/// signal, if present, counts as noise.
fn signal_and_noise(
    out: &OutputDecomposition,
    m: &Matrix6<f64>,
    signal_index: usize,
    signal_power: f64,
) -> (f64, f64) {
    let wanted = out.signal_coeffs[signal_index];
    let other = out.signal_coeffs[1 - signal_index];
    let s = wanted * wanted * 2.0 * signal_power;
    let n = quad(&out.noise_vector, m, &out.noise_vector) + other * other * 2.0 * signal_power;
    (s, n)
}

fn snr(s: f64, n: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s / n
    }
}

pub(crate) fn snrs_unchecked(m: &Matrix6<f64>, config: &DecodingConfig) -> (f64, f64) {
    let d = decompose(config);
    let (sx, nx) = signal_and_noise(&d.x_output, m, 0, config.signal_power);
    let (sp, np) = signal_and_noise(&d.p_output, m, 1, config.signal_power);
    (snr(sx, nx), snr(sp, np))
}

/// Signal-to-noise ratios `(S_x/N_x, S_p/N_p)`.
pub fn snrs(cm: &CovarianceMatrix, config: &DecodingConfig) -> Result<(f64, f64)> {
    propagate(cm, config)?;
    Ok(snrs_unchecked(&to_mat6(cm), config))
}

pub(crate) fn capacity_from_snr(snr_x: f64, snr_p: f64) -> f64 {
    0.5 * snr_x.ln_1p() + 0.5 * snr_p.ln_1p()
}

/// `½ln(1 + S_x/N_x) + ½ln(1 + S_p/N_p)` for a fixed state and decoder.
pub fn capacity(cm: &CovarianceMatrix, config: &DecodingConfig) -> Result<CapacityResult> {
    let (snr_x, snr_p) = snrs(cm, config)?;
    Ok(CapacityResult {
        capacity: capacity_from_snr(snr_x, snr_p),
        snr_x,
        snr_p,
        config: *config,
        nbar: cm.photon_number(Party::A.index(), config.signal_power)?,
        squeezing: None,
        protocol: None,
    })
}

/// Gain minimizing the `p`-readout noise; the `p` noise is quadratic in
/// `g` and nothing else depends on it.
pub fn optimal_gain(cm: &CovarianceMatrix, t1: f64, t2: f64, charlie_phase_flip: bool) -> f64 {
    optimal_gain_m(&to_mat6(cm), t1, t2, charlie_phase_flip)
}

pub(crate) fn optimal_gain_m(m: &Matrix6<f64>, t1: f64, t2: f64, charlie_phase_flip: bool) -> f64 {
    let base = DecodingConfig {
        t1,
        t2,
        g: 0.0,
        signal_power: 0.0,
        charlie_phase_flip,
    };
    let v0 = decompose(&base).p_output.noise_vector;
    let v1_full = decompose(&DecodingConfig { g: 1.0, ..base })
        .p_output
        .noise_vector;
    let v1: [f64; 6] = std::array::from_fn(|k| v1_full[k] - v0[k]);
    let cross = quad(&v0, m, &v1);
    let curvature = quad(&v1, m, &v1);
    if curvature > 1e-300 {
        -cross / curvature
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::protocol2_state;
    use approx::assert_abs_diff_eq;

    fn cfg(t1: f64, t2: f64, g: f64, p: f64) -> DecodingConfig {
        DecodingConfig::new(t1, t2, g, p).unwrap()
    }

    #[test]
    fn baselines() {
        let b = baseline_capacities(0.0).unwrap();
        assert_eq!((b.coherent, b.squeezed), (0.0, 0.0));
        let b = baseline_capacities(1.0).unwrap();
        assert_abs_diff_eq!(b.coherent, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.squeezed, 3f64.ln(), epsilon = 1e-12);
        assert!(baseline_capacities(-1.0).is_err());
        for n in [0.0, 0.3, 4.0, 100.0] {
            let b = baseline_capacities(n).unwrap();
            assert!(b.squeezed >= b.coherent);
        }
    }

    #[test]
    fn charlie_drops_out_at_full_transmission() {
        let d = propagate(&CovarianceMatrix::vacuum(3), &cfg(1.0, 0.6, 0.0, 1.0)).unwrap();
        for out in [d.x_output, d.p_output] {
            assert_eq!(out.noise_vector[4], 0.0);
            assert_eq!(out.noise_vector[5], 0.0);
        }
    }

    #[test]
    fn full_t2_reads_alice_directly() {
        let d = propagate(&CovarianceMatrix::vacuum(3), &cfg(0.4, 1.0, 0.7, 1.0)).unwrap();
        assert_eq!(d.x_output.signal_coeffs, [1.0, 0.0]);
        assert_eq!(d.x_output.noise_vector, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn decomposition_matches_covariance_propagation() {
        // Build the chain's action on the extended state (6 quadratures plus
        // two signal variables) and compare the readout variances with vᵀγv.
        let cm = protocol2_state(0.5).unwrap();
        let config = cfg(0.8, 0.7, 0.3, 1.7);
        let chain = run_chain(&config);
        let mut ext = nalgebra::DMatrix::<f64>::zeros(8, 8);
        ext.view_mut((0, 0), (6, 6)).copy_from(cm.matrix());
        ext[(6, 6)] = 2.0 * config.signal_power;
        ext[(7, 7)] = 2.0 * config.signal_power;
        let chain_d = nalgebra::DMatrix::from_fn(6, 8, |r, c| chain[(r, c)]);
        let out_cov = &chain_d * ext * chain_d.transpose();
        let d = propagate(&cm, &config).unwrap();
        let m = to_mat6(&cm);
        let (sx, nx) = signal_and_noise(&d.x_output, &m, 0, config.signal_power);
        let (sp, np) = signal_and_noise(&d.p_output, &m, 1, config.signal_power);
        assert!((out_cov[(0, 0)] - (sx + nx)).abs() < 1e-12);
        assert!((out_cov[(3, 3)] - (sp + np)).abs() < 1e-12);
    }

    #[test]
    fn zero_power_gives_zero_capacity() {
        let cm = protocol2_state(0.5).unwrap();
        assert_eq!(
            capacity(&cm, &cfg(0.5, 0.5, 0.1, 0.0)).unwrap().capacity,
            0.0
        );
    }

    #[test]
    fn capacity_increases_with_power() {
        let cm = protocol2_state(0.5).unwrap();
        let mut last = -1.0;
        for p in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let c = capacity(&cm, &cfg(0.6, 0.7, 0.2, p)).unwrap().capacity;
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn phase_flip_equals_flipping_charlies_quadratures() {
        let cm = protocol2_state(0.8).unwrap();
        let flipped = cm.flip_mode(2).unwrap();
        let config = cfg(0.3, 0.6, -0.4, 2.0);
        let a = capacity(&flipped, &config).unwrap().capacity;
        let b = capacity(&cm, &config.with_phase_flip(true))
            .unwrap()
            .capacity;
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn optimal_gain_is_stationary() {
        let cm = protocol2_state(0.6).unwrap();
        let g = optimal_gain(&cm, 0.45, 0.7, false);
        let c = |g: f64| capacity(&cm, &cfg(0.45, 0.7, g, 2.0)).unwrap().capacity;
        let h = 1e-5;
        let deriv = (c(g + h) - c(g - h)) / (2.0 * h);
        assert!(deriv.abs() < 1e-6 * c(g).max(1.0), "{deriv}");
        assert!(c(g) >= c(g + 0.05) && c(g) >= c(g - 0.05));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(DecodingConfig::new(1.1, 0.5, 0.0, 1.0).is_err());
        assert!(DecodingConfig::new(0.5, 0.5, 0.0, -1.0).is_err());
        assert!(propagate(&CovarianceMatrix::vacuum(2), &cfg(0.5, 0.5, 0.0, 1.0)).is_err());
    }
}
