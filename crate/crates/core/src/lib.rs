//! Heart-rate spike toolkit.
//!
//! Simulates 1 Hz athlete heart-rate recordings with known monitor spikes,
//! detects spikes with smoothing, wavelet and thresholding methods, scores
//! detectors against ground truth, and runs Poisson-process inference over
//! per-athlete activity collections.

pub mod detect;
pub mod evaluate;
pub mod infer;
pub mod series;
pub mod simulate;
pub mod wavelet;

pub use detect::{detect_spikes, DetectError, DetectorConfig, Method, Spike};
pub use series::{HeartRateSeries, MissingMask, ResidualSeries, SeriesError};
pub use simulate::{ScenarioConfig, SimulatedActivity};
