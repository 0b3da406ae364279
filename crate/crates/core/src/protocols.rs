//! Three-mode separable-state protocols and their separability structure.
//!
//! All three-mode states are ordered (A, B, C). Alice holds A and C, Bob holds
//! B. Before the balanced beam splitter on (A, C) every protocol state is
//! fully separable by construction; the splitter is the only entangling step.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, NoiseInjection, DEFAULT_PHYSICALITY_TOL};
use crate::symplectic::{Axis, SymplecticTransform};

/// Squeezing grid used to check the protocol properties.
pub const R_GRID: [f64; 7] = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    pub fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolId {
    P1,
    P2,
    P3,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 3] = [ProtocolId::P1, ProtocolId::P2, ProtocolId::P3];

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::P1),
            2 => Some(Self::P2),
            3 => Some(Self::P3),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::P1 => 1,
            Self::P2 => 2,
            Self::P3 => 3,
        }
    }

    /// Three-mode state before the entangling beam splitter. For protocol 1
    /// mode C is the vacuum that enters the empty port.
    pub fn pre_bs(self, r: f64) -> Result<CovarianceMatrix> {
        match self {
            Self::P1 => Ok(protocol1_pre_bs(r)?.tensor(&CovarianceMatrix::vacuum(1))),
            Self::P2 => protocol23_pre_bs(r, v2(r)),
            Self::P3 => protocol23_pre_bs(r, v1(r)),
        }
    }

    /// Final three-mode state (after the beam splitter on A, C).
    pub fn state(self, r: f64) -> Result<CovarianceMatrix> {
        self.pre_bs(r)?.apply(&entangling_beamsplitter())
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "protocol {}", self.number())
    }
}

/// Displacement variance of protocol 1 (and 3): `(1 − e^{−2r})/2`.
pub fn v1(r: f64) -> f64 {
    -(-2.0 * r).exp_m1() / 2.0
}

/// Displacement variance of protocol 2: `(e^{2r} − 1)/2`.
pub fn v2(r: f64) -> f64 {
    (2.0 * r).exp_m1() / 2.0
}

/// Closed form of the lowest eigenvalue of the protocol-1 pre-splitter CM.
pub fn protocol1_mu(r: f64) -> f64 {
    (-r).exp() * (r.cosh() - (5f64.sqrt() - 2.0) * r.sinh())
}

/// Balanced beam splitter on (A, C) of a three-mode state.
pub fn entangling_beamsplitter() -> SymplecticTransform {
    SymplecticTransform::beamsplitter(Party::A.index(), Party::C.index(), FRAC_1_SQRT_2, 3)
        .expect("fixed valid arguments")
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSqueezing(r))
    }
}

/// Two-mode state (A, B): x-squeezed A and vacuum B, both displaced in x by
/// the same classical `x ~ N(0, V₁)`.
pub fn protocol1_pre_bs(r: f64) -> Result<CovarianceMatrix> {
    check_r(r)?;
    let ab = CovarianceMatrix::squeezed_vacuum(r, Axis::X).tensor(&CovarianceMatrix::vacuum(1));
    ab.inject_noise(&NoiseInjection::new(vec![1.0, 0.0, 1.0, 0.0], v1(r))?)
}

pub fn protocol1_state(r: f64) -> Result<CovarianceMatrix> {
    ProtocolId::P1.state(r)
}

pub fn protocol2_state(r: f64) -> Result<CovarianceMatrix> {
    ProtocolId::P2.state(r)
}

pub fn protocol3_state(r: f64) -> Result<CovarianceMatrix> {
    ProtocolId::P3.state(r)
}

// A x-squeezed, B vacuum, C p-squeezed; x_A += x, x_B += √2x, p_C −= p, p_B += √2p.
fn protocol23_pre_bs(r: f64, variance: f64) -> Result<CovarianceMatrix> {
    check_r(r)?;
    let state = CovarianceMatrix::squeezed_vacuum(r, Axis::X)
        .tensor(&CovarianceMatrix::vacuum(1))
        .tensor(&CovarianceMatrix::squeezed_vacuum(r, Axis::P));
    let x_noise = NoiseInjection::new(vec![1.0, 0.0, SQRT_2, 0.0, 0.0, 0.0], variance)?;
    let p_noise = NoiseInjection::new(vec![0.0, 0.0, 0.0, SQRT_2, 0.0, -1.0], variance)?;
    state.inject_noise(&x_noise)?.inject_noise(&p_noise)
}

/// A bipartition of a three-mode state: either one mode against the other
/// two, or a two-mode reduction tested with respect to its first mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bipartition {
    #[serde(rename = "A|BC")]
    ABC,
    #[serde(rename = "B|AC")]
    BAC,
    #[serde(rename = "C|AB")]
    CAB,
    #[serde(rename = "A|B")]
    AB,
    #[serde(rename = "A|C")]
    AC,
    #[serde(rename = "B|C")]
    BC,
}

impl Bipartition {
    pub const ALL: [Bipartition; 6] = [
        Bipartition::ABC,
        Bipartition::BAC,
        Bipartition::CAB,
        Bipartition::AB,
        Bipartition::AC,
        Bipartition::BC,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::ABC => "A|BC",
            Self::BAC => "B|AC",
            Self::CAB => "C|AB",
            Self::AB => "A|B",
            Self::AC => "A|C",
            Self::BC => "B|C",
        }
    }

    /// Modes kept before testing (all three for the 1×2 splits).
    pub fn kept_modes(self) -> &'static [usize] {
        match self {
            Self::ABC | Self::BAC | Self::CAB => &[0, 1, 2],
            Self::AB => &[0, 1],
            Self::AC => &[0, 2],
            Self::BC => &[1, 2],
        }
    }

    /// Transposed mode, indexed within the kept modes.
    pub fn transposed_mode(self) -> usize {
        match self {
            Self::ABC => 0,
            Self::BAC => 1,
            Self::CAB => 2,
            Self::AB | Self::AC | Self::BC => 0,
        }
    }

    pub fn is_reduction(self) -> bool {
        matches!(self, Self::AB | Self::AC | Self::BC)
    }

    pub fn min_eig(self, cm: &CovarianceMatrix) -> Result<f64> {
        let reduced = cm.partial_trace(self.kept_modes())?;
        reduced.min_eig_ppt(&[self.transposed_mode()])
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Separable,
}

impl Verdict {
    pub fn from_eigenvalue(min_eig: f64, tol: f64) -> Self {
        if min_eig < -tol {
            Verdict::Entangled
        } else {
            Verdict::Separable
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Entangled => "entangled",
            Verdict::Separable => "separable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartitionEntry {
    pub bipartition: Bipartition,
    pub min_eigenvalue: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub entries: Vec<BipartitionEntry>,
    /// Minimum eigenvalue of γ.
    pub nonclassicality: f64,
    /// Minimum eigenvalue of γ + iΩ.
    pub min_uncertainty_eigenvalue: f64,
    pub physical: bool,
    pub tolerance: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SeparabilityReport {
    /// Panics if `b` is not in the report (two-mode reports hold only `A|B`).
    pub fn entry(&self, b: Bipartition) -> &BipartitionEntry {
        self.entries
            .iter()
            .find(|e| e.bipartition == b)
            .expect("report holds every bipartition")
    }

    pub fn min_eig(&self, b: Bipartition) -> f64 {
        self.entry(b).min_eigenvalue
    }

    pub fn verdict(&self, b: Bipartition) -> Verdict {
        self.entry(b).verdict
    }

    /// Bipartitions flagged entangled, in report order.
    pub fn entangled(&self) -> Vec<Bipartition> {
        self.entries
            .iter()
            .filter(|e| e.verdict == Verdict::Entangled)
            .map(|e| e.bipartition)
            .collect()
    }
}

pub fn classify(cm: &CovarianceMatrix) -> Result<SeparabilityReport> {
    classify_with_tolerance(cm, DEFAULT_PHYSICALITY_TOL)
}

/// Evaluates every bipartition of a three-mode state, or the single `A|B`
/// split of a two-mode state. Unphysical input still yields a report, with
/// `physical = false` and a warning.
pub fn classify_with_tolerance(cm: &CovarianceMatrix, tol: f64) -> Result<SeparabilityReport> {
    let bipartitions: &[Bipartition] = match cm.n_modes() {
        2 => &[Bipartition::AB],
        3 => &Bipartition::ALL,
        found => return Err(Error::WrongModeCount { expected: 3, found }),
    };
    let entries = bipartitions
        .iter()
        .map(|&b| {
            let min_eigenvalue = b.min_eig(cm)?;
            Ok(BipartitionEntry {
                bipartition: b,
                min_eigenvalue,
                verdict: Verdict::from_eigenvalue(min_eigenvalue, tol),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_unc = cm.min_uncertainty_eigenvalue();
    let physical = min_unc >= -tol;
    let mut warnings = Vec::new();
    if !physical {
        warnings.push(format!(
            "covariance matrix violates the uncertainty relation: min eig(γ + iΩ) = {min_unc:e}"
        ));
    }
    Ok(SeparabilityReport {
        entries,
        nonclassicality: cm.nonclassicality(),
        min_uncertainty_eigenvalue: min_unc,
        physical,
        tolerance: tol,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn protocol1_pre_bs_closed_form() {
        for r in [0.1, 0.5, 1.2] {
            let cm = protocol1_pre_bs(r).unwrap();
            let e = (-2.0 * r).exp();
            let want = DMatrix::from_row_slice(
                4,
                4,
                &[
                    1.0,
                    0.0,
                    1.0 - e,
                    0.0, //
                    0.0,
                    1.0 / e,
                    0.0,
                    0.0, //
                    1.0 - e,
                    0.0,
                    2.0 - e,
                    0.0, //
                    0.0,
                    0.0,
                    0.0,
                    1.0,
                ],
            );
            assert!((cm.matrix() - want).amax() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_positive_r() {
        assert_eq!(
            protocol1_pre_bs(0.0).unwrap_err(),
            Error::InvalidSqueezing(0.0)
        );
        assert!(protocol2_state(-0.3).is_err());
        assert!(protocol3_state(f64::NAN).is_err());
    }

    #[test]
    fn small_r_approaches_vacuum() {
        let cm = protocol1_pre_bs(1e-9).unwrap();
        assert!((cm.matrix() - DMatrix::identity(4, 4)).amax() < 1e-8);
    }

    #[test]
    fn reduced_mode_a_is_classical() {
        for r in R_GRID {
            let a = protocol1_pre_bs(r).unwrap().partial_trace(&[0]).unwrap();
            assert_abs_diff_eq!(a.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.matrix()[(1, 1)], (2.0 * r).exp(), epsilon = 1e-12);
            assert_abs_diff_eq!(a.nonclassicality(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn variances() {
        assert_abs_diff_eq!(v1(0.5), (1.0 - (-1.0f64).exp()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v2(0.5), (1f64.exp() - 1.0) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_report_is_all_zero() {
        let rep = classify(&CovarianceMatrix::vacuum(3)).unwrap();
        for e in &rep.entries {
            assert_abs_diff_eq!(e.min_eigenvalue, 0.0, epsilon = 1e-12);
            assert_eq!(e.verdict, Verdict::Separable);
        }
        assert!(rep.physical);
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn classify_takes_two_or_three_modes() {
        assert_eq!(
            classify(&CovarianceMatrix::vacuum(4)).unwrap_err(),
            Error::WrongModeCount {
                expected: 3,
                found: 4
            }
        );
        let rep = classify(&protocol1_pre_bs(0.5).unwrap()).unwrap();
        assert_eq!(rep.entries.len(), 1);
        assert_eq!(rep.verdict(Bipartition::AB), Verdict::Separable);
    }

    #[test]
    fn unphysical_input_is_reported_with_warning() {
        let cm = CovarianceMatrix::from_matrix(DMatrix::identity(6, 6) * 0.5).unwrap();
        let rep = classify(&cm).unwrap();
        assert!(!rep.physical);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn p3_and_p2_differ_only_in_variance() {
        let r = 0.7;
        let p2 = ProtocolId::P2.pre_bs(r).unwrap();
        let p3 = ProtocolId::P3.pre_bs(r).unwrap();
        let base = protocol23_pre_bs(r, 0.0).unwrap();
        let d2 = (p2.matrix() - base.matrix()) / v2(r);
        let d3 = (p3.matrix() - base.matrix()) / v1(r);
        assert!((d2 - d3).amax() < 1e-12);
    }
}
