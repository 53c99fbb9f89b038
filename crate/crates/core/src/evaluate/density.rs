use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::detect::Spike;

const SECONDS_PER_HOUR: f64 = 3600.0;
/// Kernel values beyond this many standard deviations are treated as zero.
const KERNEL_REACH: f64 = 10.0;

/// Gaussian smoothing kernel for spike densities, with the quadrature grid
/// used to integrate it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelDensity {
    /// Standard deviation, seconds.
    pub sigma: f64,
    /// Base grid spacing, seconds.
    pub grid_step: f64,
    /// Trapezoid panels per base grid step.
    pub substeps: usize,
}

impl Default for KernelDensity {
    fn default() -> Self {
        Self {
            sigma: 5.0,
            grid_step: 1.0,
            substeps: 20,
        }
    }
}

impl KernelDensity {
    pub fn f(&self, t: f64) -> f64 {
        let z = t / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    fn grid(&self, duration: f64) -> (usize, f64) {
        let per_second = self.substeps.max(1) as f64 / self.grid_step;
        let panels = ((duration * per_second).round() as usize).max(1);
        (panels, duration / panels as f64)
    }
}

/// Density sampled on a uniform grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub step: f64,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Trapezoidal integral over `[0, T]`.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => step * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// `ρ(t) = Σ h_i f_{s_i}(t)`, where `f_s` is the kernel centred on `s` and
/// rescaled to integrate to one over `[0, T]` under the same quadrature.
pub fn spike_density(spikes: &[Spike], duration: f64, kernel: &KernelDensity) -> DensityGrid {
    let (panels, step) = kernel.grid(duration);
    let mut values = vec![0.0; panels + 1];
    let reach = KERNEL_REACH * kernel.sigma;
    for s in spikes {
        let lo = (((s.time - reach) / step).floor().max(0.0) as usize).min(panels);
        let hi = (((s.time + reach) / step).ceil().max(0.0) as usize).min(panels);
        let taps: Vec<f64> = (lo..=hi)
            .map(|j| kernel.f(j as f64 * step - s.time))
            .collect();
        let mut norm = step * taps.iter().sum::<f64>();
        if lo == 0 {
            norm -= 0.5 * step * taps[0];
        }
        if hi == panels {
            norm -= 0.5 * step * taps[taps.len() - 1];
        }
        if norm <= 0.0 {
            continue;
        }
        let scale = s.height / norm;
        for (v, w) in values[lo..=hi].iter_mut().zip(&taps) {
            *v += scale * w;
        }
    }
    DensityGrid { step, values }
}

/// `(ε, ε*)` in bpm/hour: `ε = (1/T)∫|ρ_r − ρ_d|` and
/// `ε* = (1/T)∫(ρ_r − |ρ_r − ρ_d|)`.
pub fn density_error(
    truth: &[Spike],
    detected: &[Spike],
    duration: f64,
    kernel: &KernelDensity,
) -> (f64, f64) {
    let real = spike_density(truth, duration, kernel);
    let found = spike_density(detected, duration, kernel);
    let diff: Vec<f64> = real
        .values
        .iter()
        .zip(&found.values)
        .map(|(r, d)| (r - d).abs())
        .collect();
    let gain: Vec<f64> = real.values.iter().zip(&diff).map(|(r, e)| r - e).collect();
    let per_hour = SECONDS_PER_HOUR / duration;
    (
        trapezoid(&diff, real.step) * per_hour,
        trapezoid(&gain, real.step) * per_hour,
    )
}
