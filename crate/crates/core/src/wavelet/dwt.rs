use serde::{Deserialize, Serialize};

use super::{reflect, FilterBank, Result, WaveletError};

/// Multilevel decomposition `V_0 = V_M ⊕ W_M ⊕ … ⊕ W_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwtDecomposition {
    pub level: usize,
    /// Approximation coefficients at the coarsest level.
    pub approx: Vec<f64>,
    /// Detail coefficients, `details[0]` is level 1 (finest).
    pub details: Vec<Vec<f64>>,
    #[serde(default = "symmetric")]
    pub extension_mode: String,
    pub original_length: usize,
}

fn symmetric() -> String {
    "symmetric".to_string()
}

impl DwtDecomposition {
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }
}

/// Coefficient shrinkage rule applied to detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkRule {
    Hard,
    Soft,
    Garotte,
}

impl ShrinkRule {
    pub fn apply(self, x: f64, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return x;
        }
        if x.abs() < lambda {
            return 0.0;
        }
        match self {
            ShrinkRule::Hard => x,
            ShrinkRule::Soft => x - lambda * x.signum(),
            ShrinkRule::Garotte => x - lambda * lambda / x,
        }
    }
}

/// Which detail levels are shrunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkLevels {
    #[default]
    All,
    /// Only levels `1..=k`; coarser details are kept as they are.
    Finest(usize),
}

impl ShrinkLevels {
    fn includes(self, level: usize) -> bool {
        match self {
            ShrinkLevels::All => true,
            ShrinkLevels::Finest(k) => level <= k,
        }
    }
}

/// Deepest level at which every coefficient still sees at least one full
/// filter's worth of input: `⌊log2(n / (L − 1))⌋`.
pub fn max_level(len: usize, filter_len: usize) -> usize {
    if filter_len < 2 || len < filter_len - 1 {
        return 0;
    }
    let ratio = len / (filter_len - 1);
    (usize::BITS - 1 - ratio.leading_zeros()) as usize
}

fn analysis(x: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = x.len();
    let taps = filter.len();
    let out_len = (n + taps - 1) / 2;
    (0..out_len)
        .map(|k| {
            let centre = 2 * k as isize + 1;
            filter
                .iter()
                .enumerate()
                .map(|(j, &f)| f * x[reflect(centre - j as isize, n)])
                .sum()
        })
        .collect()
}

fn synthesis(approx: &[f64], detail: &[f64], bank: &FilterBank) -> Vec<f64> {
    let c = approx.len();
    let taps = bank.len();
    let mut full = vec![0.0; 2 * c + taps - 2];
    for k in 0..c {
        for j in 0..taps {
            full[2 * k + j] += approx[k] * bank.rec_lo[j] + detail[k] * bank.rec_hi[j];
        }
    }
    let start = taps - 2;
    let out_len = 2 * c + 2 - taps;
    full[start..start + out_len].to_vec()
}

/// Decomposes `signal` to `level` by recursive filtering and decimation.
pub fn dwt_decompose(signal: &[f64], bank: &FilterBank, level: usize) -> Result<DwtDecomposition> {
    if signal.is_empty() {
        return Err(WaveletError::EmptySignal);
    }
    let len = signal.len();
    if level == 0 || level >= usize::BITS as usize || (1usize << level) > len {
        return Err(WaveletError::LevelTooDeep { level, len });
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    for _ in 0..level {
        let d = analysis(&approx, &bank.dec_hi);
        approx = analysis(&approx, &bank.dec_lo);
        details.push(d);
    }
    Ok(DwtDecomposition {
        level,
        approx,
        details,
        extension_mode: symmetric(),
        original_length: len,
    })
}

/// Inverse transform, truncated to the original signal length.
pub fn dwt_reconstruct(decomp: &DwtDecomposition, bank: &FilterBank) -> Result<Vec<f64>> {
    if decomp.details.len() != decomp.level || decomp.level == 0 {
        return Err(WaveletError::ShapeMismatch(format!(
            "level {} with {} detail bands",
            decomp.level,
            decomp.details.len()
        )));
    }
    let mut approx = decomp.approx.clone();
    for (m, detail) in decomp.details.iter().enumerate().rev() {
        if approx.len() == detail.len() + 1 {
            approx.pop();
        }
        if approx.len() != detail.len() || 2 * approx.len() + 2 < bank.len() {
            return Err(WaveletError::ShapeMismatch(format!(
                "level {}: {} approximation vs {} detail coefficients",
                m + 1,
                approx.len(),
                detail.len()
            )));
        }
        approx = synthesis(&approx, detail, bank);
    }
    if approx.len() < decomp.original_length {
        return Err(WaveletError::ShapeMismatch(format!(
            "reconstruction has {} samples, expected {}",
            approx.len(),
            decomp.original_length
        )));
    }
    approx.truncate(decomp.original_length);
    Ok(approx)
}

/// Applies one threshold to every detail coefficient.
pub fn shrink_coefficients(
    decomp: &DwtDecomposition,
    rule: ShrinkRule,
    lambda: f64,
) -> DwtDecomposition {
    shrink_levels(decomp, rule, &vec![lambda; decomp.level], ShrinkLevels::All)
}

/// Applies `lambdas[m-1]` to level `m` for each selected level. Approximation
/// coefficients are never touched.
pub fn shrink_levels(
    decomp: &DwtDecomposition,
    rule: ShrinkRule,
    lambdas: &[f64],
    levels: ShrinkLevels,
) -> DwtDecomposition {
    let mut out = decomp.clone();
    for (m, (band, &lambda)) in out.details.iter_mut().zip(lambdas).enumerate() {
        if levels.includes(m + 1) {
            for c in band.iter_mut() {
                *c = rule.apply(*c, lambda);
            }
        }
    }
    out
}

/// Per-level universal thresholds `mult · σ̂_m · √(2 ln n_m)` with the robust
/// noise estimate `σ̂_m = median(|d_m|) / 0.6745`.
pub fn universal_thresholds(decomp: &DwtDecomposition, multiplier: f64) -> Vec<f64> {
    decomp
        .details
        .iter()
        .map(|band| {
            if band.len() < 2 {
                return 0.0;
            }
            let mut abs: Vec<f64> = band.iter().map(|c| c.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let mid = abs.len() / 2;
            let median = if abs.len().is_multiple_of(2) {
                0.5 * (abs[mid - 1] + abs[mid])
            } else {
                abs[mid]
            };
            let sigma = median / 0.6745;
            multiplier * sigma * (2.0 * (band.len() as f64).ln()).sqrt()
        })
        .collect()
}

/// Wavelet-shrinkage smoothing: decompose, shrink details with universal
/// thresholds, reconstruct.
pub fn denoise(
    signal: &[f64],
    bank: &FilterBank,
    level: usize,
    rule: ShrinkRule,
    multiplier: f64,
    levels: ShrinkLevels,
) -> Result<Vec<f64>> {
    let decomp = dwt_decompose(signal, bank, level)?;
    let lambdas = universal_thresholds(&decomp, multiplier);
    dwt_reconstruct(&shrink_levels(&decomp, rule, &lambdas, levels), bank)
}
