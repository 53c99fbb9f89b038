//! Wavelet transforms used for smoothing and spike localisation.
//!
//! - [`dwt`]: multilevel discrete wavelet transform through an orthogonal
//!   filter bank, with hard, soft and non-negative garotte shrinkage.
//! - [`cwt`]: continuous wavelet transform with the complex Morlet wavelet.
//!
//! Both transforms extend the signal by half-sample symmetric reflection at
//! its ends.

pub mod cwt;
pub mod dwt;
pub mod filters;

pub use cwt::{cwt, cwt_magnitude, CwtMatrix, MorletParams};
pub use dwt::{
    denoise, dwt_decompose, dwt_reconstruct, max_level, shrink_coefficients, shrink_levels,
    universal_thresholds, DwtDecomposition, ShrinkLevels, ShrinkRule,
};
pub use filters::FilterBank;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaveletError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("decomposition level {level} too deep for a signal of length {len}")]
    LevelTooDeep { level: usize, len: usize },
    #[error("coefficient shapes do not form a valid decomposition: {0}")]
    ShapeMismatch(String),
    #[error("scale {0} is not positive")]
    NonPositiveScale(f64),
    #[error("unknown wavelet `{0}`")]
    UnknownWavelet(String),
}

pub type Result<T> = std::result::Result<T, WaveletError>;

/// Half-sample symmetric extension: `x[-1] = x[0]`, `x[n] = x[n-1]`.
#[inline]
pub(crate) fn reflect(index: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let mut i = index.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}
