use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{reflect, Result, WaveletError};

/// Kernel taps are dropped once `|ψ|` falls below this.
const SUPPORT_CUTOFF: f64 = 1e-8;

/// Complex Morlet wavelet `ψ(t) = (bπ)^{-1/2} exp(−t²/b) exp(2πi c t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorletParams {
    /// Bandwidth `b` in s².
    pub bandwidth: f64,
    /// Central frequency `c` in Hz.
    pub center_frequency: f64,
}

impl Default for MorletParams {
    fn default() -> Self {
        Self {
            bandwidth: 1.0,
            center_frequency: 1.0,
        }
    }
}

impl MorletParams {
    pub fn psi(&self, t: f64) -> Complex64 {
        let b = self.bandwidth;
        let envelope = (-t * t / b).exp() / (b * PI).sqrt();
        Complex64::from_polar(envelope, 2.0 * PI * self.center_frequency * t)
    }

    /// Largest `|u|` with `|ψ(u)| ≥ SUPPORT_CUTOFF`.
    fn support_radius(&self) -> f64 {
        let b = self.bandwidth;
        let peak = 1.0 / (b * PI).sqrt();
        if peak <= SUPPORT_CUTOFF {
            0.0
        } else {
            (b * (peak / SUPPORT_CUTOFF).ln()).sqrt()
        }
    }

    /// Taps `|a|^{-1/2} conj(ψ(k/a))` for `k = −K..=K`.
    fn kernel(&self, scale: f64) -> Vec<Complex64> {
        let radius = (self.support_radius() * scale).floor() as isize;
        let norm = scale.abs().sqrt().recip();
        (-radius..=radius)
            .map(|k| self.psi(k as f64 / scale).conj() * norm)
            .collect()
    }
}

/// CWT coefficients, one row per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CwtMatrix {
    pub scales: Vec<f64>,
    pub coefficients: Vec<Vec<Complex64>>,
    pub wavelet: MorletParams,
}

impl CwtMatrix {
    pub fn magnitude(&self, row: usize) -> Vec<f64> {
        self.coefficients[row].iter().map(|c| c.norm()).collect()
    }
}

fn transform_row(signal: &[f64], scale: f64, params: &MorletParams) -> Vec<Complex64> {
    let kernel = params.kernel(scale);
    let radius = (kernel.len() / 2) as isize;
    let n = signal.len();
    (0..n as isize)
        .map(|tau| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * signal[reflect(tau + j as isize - radius, n)])
                .sum()
        })
        .collect()
}

/// `W(a, τ) = |a|^{-1/2} Σ_t f(t) conj(ψ((t − τ)/a))` for every scale `a` and
/// every sample `τ`, summing directly over the truncated wavelet support.
pub fn cwt(signal: &[f64], scales: &[f64], params: MorletParams) -> Result<CwtMatrix> {
    if signal.is_empty() {
        return Err(WaveletError::EmptySignal);
    }
    if let Some(&bad) = scales.iter().find(|&&a| !(a > 0.0)) {
        return Err(WaveletError::NonPositiveScale(bad));
    }
    let coefficients = scales
        .iter()
        .map(|&a| transform_row(signal, a, &params))
        .collect();
    Ok(CwtMatrix {
        scales: scales.to_vec(),
        coefficients,
        wavelet: params,
    })
}

/// `|W(a, ·)|` at a single scale.
pub fn cwt_magnitude(signal: &[f64], scale: f64, params: MorletParams) -> Result<Vec<f64>> {
    Ok(cwt(signal, &[scale], params)?.magnitude(0))
}
