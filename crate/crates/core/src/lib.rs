//! Gaussian continuous-variable states: covariance-matrix algebra, three
//! tripartite entangler protocols, PPT separability certification of
//! measured matrices, and dense-coding capacity with a decoding chain.
//!
//! Conventions: quadrature ordering `(x1, p1, x2, p2, ...)`, vacuum
//! covariance equal to the identity, and `Ω = ⊕ [[0, 1], [-1, 0]]`.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certification;
pub mod densecoding;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod protocols;
pub mod random;
pub mod symplectic;
pub mod validation;

pub use error::{Error, ParseError, Result};
pub use gaussian::{CovarianceMatrix, NoiseInjection};
pub use protocols::{classify, Bipartition, Party, ProtocolId, SeparabilityReport, Verdict};
pub use symplectic::{Axis, SymplecticForm, SymplecticTransform};

/// Environment variable read by [`init_thread_pool`].
pub const THREADS_ENV: &str = "CV_ENTANGLER_THREADS";

/// Sizes the global rayon pool from `CV_ENTANGLER_THREADS` (unset or 0 means
/// automatic). Results never depend on the thread count. Returns an error
/// message for an unparsable value; a second call is a no-op.
pub fn init_thread_pool() -> std::result::Result<(), String> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("{THREADS_ENV} must be a nonnegative integer, got '{v}'"))?,
        Err(_) => 0,
    };
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}
