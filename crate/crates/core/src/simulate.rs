//! Synthetic heart-rate activities with ground-truth spikes.
//!
//! Three components are simulated in order at 1 s resolution:
//!
//! - base heart rate `X`: Euler–Maruyama integration of
//!   `dX = −V'(X, t) dt + σ dW¹` on an asymmetric piecewise-quadratic
//!   potential whose minimum may move (interval training, step changes);
//! - monitor noise `Y`: Ornstein–Uhlenbeck `dY = −α Y dt + β(t) dW²`, with
//!   `β` raised during designated noisy windows;
//! - spikes `Z`: an inhomogeneous Poisson process of intensity `r(X_t)`
//!   sampled by per-second Bernoulli thinning, with log-normal heights.
//!
//! The recorded series is `round(moving_average(X + Y + Z))`. Every component
//! has its own random stream, so changing the spike seed leaves `X` and `Y`
//! untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::Spike;
use crate::series::{moving_average, HeartRateSeries, SeriesError};

/// Shortest activity kept for analysis, seconds.
pub const MIN_DURATION: usize = 300;
/// Integration envelope for the base heart rate.
const ENVELOPE: (f64, f64) = (0.0, 300.0);
/// Largest per-second spike probability accepted by the thinning sampler.
const MAX_STEP_PROBABILITY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("base heart rate left [0, 300] bpm at t = {t} s ({value})")]
    UnstableIntegration { t: usize, value: f64 },
    #[error("spike rate {per_hour}/h at {bpm} bpm exceeds the thinning limit")]
    RateTooHigh { bpm: f64, per_hour: f64 },
    #[error("component lengths differ: {0:?}")]
    LengthMismatch([usize; 3]),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// `V(x) = ½k_L(x−m)²` below the minimum `m`, `½k_R(x−m)²` above it, with an
/// extra quadratic wall of stiffness `k_ceiling` beyond `ceiling`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialSurface {
    pub minimum: f64,
    pub k_left: f64,
    pub k_right: f64,
    pub ceiling: f64,
    pub k_ceiling: f64,
}

impl Default for PotentialSurface {
    fn default() -> Self {
        Self {
            minimum: 155.0,
            k_left: 0.001,
            k_right: 0.004,
            ceiling: 195.0,
            k_ceiling: 0.05,
        }
    }
}

impl PotentialSurface {
    /// `∂V/∂x` at heart rate `x` when the minimum sits at `m`.
    pub fn gradient(&self, x: f64, m: f64) -> f64 {
        let d = x - m;
        let mut g = if d <= 0.0 {
            self.k_left * d
        } else {
            self.k_right * d
        };
        let over = x - self.ceiling.max(m);
        if over > 0.0 {
            g += self.k_ceiling * over;
        }
        g
    }

    pub fn value(&self, x: f64, m: f64) -> f64 {
        let d = x - m;
        let mut v = if d <= 0.0 {
            0.5 * self.k_left * d * d
        } else {
            0.5 * self.k_right * d * d
        };
        let over = x - self.ceiling.max(m);
        if over > 0.0 {
            v += 0.5 * self.k_ceiling * over * over;
        }
        v
    }
}

/// Piecewise-constant spike rate over heart rate, in spikes per hour.
/// `rates[i]` applies on `[edges[i-1], edges[i])`, with the first and last
/// entries covering everything below and above the outer edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub edges: Vec<f64>,
    pub rates_per_hour: Vec<f64>,
}

impl RateFunction {
    pub fn constant(per_hour: f64) -> Self {
        Self {
            edges: Vec::new(),
            rates_per_hour: vec![per_hour],
        }
    }

    /// `low` below `edge`, `high` at or above it.
    pub fn step(edge: f64, low: f64, high: f64) -> Self {
        Self {
            edges: vec![edge],
            rates_per_hour: vec![low, high],
        }
    }

    pub fn bin_of(&self, bpm: f64) -> usize {
        self.edges.partition_point(|&e| e <= bpm)
    }

    pub fn rate(&self, bpm: f64) -> f64 {
        self.rates_per_hour[self.bin_of(bpm)]
    }

    /// Seconds spent in each rate bin by `path`.
    pub fn exposure(&self, path: &[f64]) -> Vec<u64> {
        let mut out = vec![0; self.rates_per_hour.len()];
        for &x in path {
            out[self.bin_of(x)] += 1;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.rates_per_hour.len() != self.edges.len() + 1 {
            return Err(SimError::InvalidConfig(
                "rate function needs one more rate than edges".into(),
            ));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidConfig("rate edges must increase".into()));
        }
        if self
            .rates_per_hour
            .iter()
            .any(|&r| !(r >= 0.0) || !r.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "spike rates must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Fixed potential minimum, quiet monitor.
    Constant,
    /// Minimum alternates between rest and work levels.
    IntervalTraining,
    /// Minimum jumps from the rest level to the work level once.
    StepChange,
    /// Fixed minimum with a noisy monitor for the first noisy block.
    Heteroscedastic,
    /// Interval training with every other noisy block starting at t = 0.
    Combined,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Constant,
        Scenario::IntervalTraining,
        Scenario::StepChange,
        Scenario::Heteroscedastic,
        Scenario::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constant => "constant",
            Scenario::IntervalTraining => "interval_training",
            Scenario::StepChange => "step_change",
            Scenario::Heteroscedastic => "heteroscedastic",
            Scenario::Combined => "combined",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Timing and levels that shape the scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityShape {
    pub rest_level: f64,
    pub work_level: f64,
    pub rest_seconds: usize,
    pub work_seconds: usize,
    /// Fraction of the duration at which a step change happens.
    pub step_fraction: f64,
    /// Length of a noisy monitor block, seconds.
    pub noisy_block: usize,
}

impl Default for ActivityShape {
    fn default() -> Self {
        Self {
            rest_level: 145.0,
            work_level: 165.0,
            rest_seconds: 480,
            work_seconds: 600,
            step_fraction: 0.4,
            noisy_block: 600,
        }
    }
}

/// Ornstein–Uhlenbeck monitor-noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSchedule {
    /// Mean-reversion rate, 1/s.
    pub alpha: f64,
    /// Diffusion outside noisy blocks, bpm/√s.
    pub beta_quiet: f64,
    /// Diffusion inside noisy blocks, bpm/√s.
    pub beta_noisy: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            beta_quiet: 0.25,
            beta_noisy: 0.6,
        }
    }
}

/// Log-normal spike heights: `ln h ~ N(mu_ln, sigma_ln²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightDistribution {
    pub mu_ln: f64,
    pub sigma_ln: f64,
}

impl Default for HeightDistribution {
    fn default() -> Self {
        Self {
            mu_ln: 15f64.ln(),
            sigma_ln: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Activity length, seconds.
    pub duration: usize,
    pub scenario: Scenario,
    pub potential: PotentialSurface,
    /// Base-rate diffusion σ, bpm/√s.
    pub sigma: f64,
    pub noise: NoiseSchedule,
    pub shape: ActivityShape,
    pub spike_rate: RateFunction,
    pub spike_height: HeightDistribution,
    /// Moving-average width applied before rounding, seconds.
    pub assembly_width: usize,
    pub seed: u64,
    /// Overrides the spike stream's seed; base and noise streams keep `seed`.
    pub spike_seed: Option<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 3600,
            scenario: Scenario::Constant,
            potential: PotentialSurface::default(),
            sigma: 0.05,
            noise: NoiseSchedule::default(),
            shape: ActivityShape::default(),
            spike_rate: RateFunction::step(150.0, 4.0, 10.0),
            spike_height: HeightDistribution::default(),
            assembly_width: 3,
            seed: 0,
            spike_seed: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_scenario(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration < MIN_DURATION {
            return Err(SimError::InvalidConfig(format!(
                "duration {} s is shorter than {MIN_DURATION} s",
                self.duration
            )));
        }
        let p = &self.potential;
        if !(p.k_left > 0.0 && p.k_right > p.k_left && p.k_ceiling >= 0.0) {
            return Err(SimError::InvalidConfig(
                "potential needs 0 < k_left < k_right and k_ceiling >= 0".into(),
            ));
        }
        if !(self.sigma >= 0.0) {
            return Err(SimError::InvalidConfig("sigma must be non-negative".into()));
        }
        let n = &self.noise;
        if n.beta_quiet < 0.0 || n.beta_noisy < 0.0 {
            return Err(SimError::InvalidConfig(
                "noise diffusion must be non-negative".into(),
            ));
        }
        if (n.beta_quiet > 0.0 || n.beta_noisy > 0.0) && !(n.alpha > 0.0) {
            return Err(SimError::InvalidConfig(
                "alpha must be positive when beta is".into(),
            ));
        }
        if self.spike_height.sigma_ln < 0.0 {
            return Err(SimError::InvalidConfig(
                "sigma_ln must be non-negative".into(),
            ));
        }
        if self.assembly_width == 0 {
            return Err(SimError::InvalidConfig(
                "assembly width must be positive".into(),
            ));
        }
        self.spike_rate.validate()
    }

    /// Location of the potential minimum at second `t`.
    pub fn minimum_at(&self, t: usize) -> f64 {
        let s = &self.shape;
        match self.scenario {
            Scenario::Constant | Scenario::Heteroscedastic => self.potential.minimum,
            Scenario::IntervalTraining | Scenario::Combined => {
                let cycle = s.rest_seconds + s.work_seconds;
                if cycle == 0 || t % cycle < s.rest_seconds {
                    s.rest_level
                } else {
                    s.work_level
                }
            }
            Scenario::StepChange => {
                if (t as f64) < s.step_fraction * self.duration as f64 {
                    s.rest_level
                } else {
                    s.work_level
                }
            }
        }
    }

    /// Whether second `t` lies in a noisy monitor block.
    pub fn is_noisy(&self, t: usize) -> bool {
        let block = self.shape.noisy_block.max(1);
        match self.scenario {
            Scenario::Heteroscedastic => t < block,
            Scenario::Combined => (t / block).is_multiple_of(2),
            _ => false,
        }
    }

    pub fn beta_at(&self, t: usize) -> f64 {
        if self.is_noisy(t) {
            self.noise.beta_noisy
        } else {
            self.noise.beta_quiet
        }
    }

    fn stream(&self, seed: u64, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        rng
    }
}

/// A simulated recording with the spikes that were injected into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedActivity {
    pub series: HeartRateSeries,
    pub truth: Vec<Spike>,
    pub scenario: ScenarioConfig,
    /// Base heart rate `X` before noise and spikes.
    #[serde(skip)]
    pub base: Vec<f64>,
}

/// Base heart rate `X_t`, starting at the potential minimum.
pub fn simulate_base(config: &ScenarioConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = config.stream(config.seed, 1);
    let mut x = Vec::with_capacity(config.duration);
    let mut current = config.minimum_at(0);
    x.push(current);
    for t in 0..config.duration - 1 {
        let drift = config.potential.gradient(current, config.minimum_at(t));
        let z: f64 = rng.sample(StandardNormal);
        current = current - drift + config.sigma * z;
        if !(ENVELOPE.0..=ENVELOPE.1).contains(&current) {
            return Err(SimError::UnstableIntegration {
                t: t + 1,
                value: current,
            });
        }
        x.push(current);
    }
    Ok(x)
}

/// Monitor noise `Y_t`, starting at zero.
pub fn simulate_noise(config: &ScenarioConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = config.stream(config.seed, 2);
    let alpha = config.noise.alpha;
    let mut y = Vec::with_capacity(config.duration);
    let mut current = 0.0;
    y.push(current);
    for t in 0..config.duration - 1 {
        let z: f64 = rng.sample(StandardNormal);
        current = current - alpha * current + config.beta_at(t) * z;
        y.push(current);
    }
    Ok(y)
}

/// Spike process `Z_t` driven by `r(X_t)`, plus the ground-truth list.
pub fn simulate_spikes(base: &[f64], config: &ScenarioConfig) -> Result<(Vec<f64>, Vec<Spike>)> {
    config.spike_rate.validate()?;
    let heights = LogNormal::new(config.spike_height.mu_ln, config.spike_height.sigma_ln)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut rng = config.stream(config.spike_seed.unwrap_or(config.seed), 3);
    let mut z = vec![0.0; base.len()];
    let mut truth = Vec::new();
    for (t, &x) in base.iter().enumerate() {
        let per_hour = config.spike_rate.rate(x);
        let p = per_hour / 3600.0;
        if p > MAX_STEP_PROBABILITY {
            return Err(SimError::RateTooHigh { bpm: x, per_hour });
        }
        let u: f64 = rng.random();
        if u < p {
            let h = heights.sample(&mut rng);
            z[t] = h;
            truth.push(Spike::new(t as f64, h, x));
        }
    }
    Ok((z, truth))
}

/// `H = round(moving_average(X + Y + Z))`.
pub fn assemble(
    base: Vec<f64>,
    noise: &[f64],
    spikes: &[f64],
    truth: Vec<Spike>,
    config: &ScenarioConfig,
) -> Result<SimulatedActivity> {
    if base.len() != noise.len() || base.len() != spikes.len() {
        return Err(SimError::LengthMismatch([
            base.len(),
            noise.len(),
            spikes.len(),
        ]));
    }
    let raw: Vec<f64> = base
        .iter()
        .zip(noise)
        .zip(spikes)
        .map(|((x, y), z)| (x + y) + z)
        .collect();
    let smoothed = moving_average(&HeartRateSeries::new(0.0, raw)?, config.assembly_width)?;
    let rounded = smoothed.samples().iter().map(|v| v.round()).collect();
    Ok(SimulatedActivity {
        series: HeartRateSeries::new(0.0, rounded)?,
        truth,
        scenario: config.clone(),
        base,
    })
}

/// Runs all three components and assembles the recording.
pub fn simulate_activity(config: &ScenarioConfig) -> Result<SimulatedActivity> {
    let base = simulate_base(config)?;
    let noise = simulate_noise(config)?;
    let (z, truth) = simulate_spikes(&base, config)?;
    assemble(base, &noise, &z, truth, config)
}

/// Configurations for a batch: scenarios cycle through `Scenario::ALL` and
/// activity `i` gets seed `base_seed + i`.
pub fn batch_configs(
    template: &ScenarioConfig,
    count: usize,
    base_seed: u64,
) -> Vec<ScenarioConfig> {
    (0..count)
        .map(|i| ScenarioConfig {
            scenario: Scenario::ALL[i % Scenario::ALL.len()],
            seed: base_seed.wrapping_add(i as u64),
            spike_seed: None,
            ..template.clone()
        })
        .collect()
}

/// Simulates every configuration in parallel; output order follows input.
pub fn simulate_batch(configs: &[ScenarioConfig]) -> Result<Vec<SimulatedActivity>> {
    configs.par_iter().map(simulate_activity).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig {
            scenario,
            sigma: 0.0,
            noise: NoiseSchedule {
                beta_quiet: 0.0,
                beta_noisy: 0.0,
                ..NoiseSchedule::default()
            },
            spike_rate: RateFunction::constant(0.0),
            ..ScenarioConfig::default()
        }
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn potential_shape() {
        let p = PotentialSurface::default();
        let m = p.minimum;
        assert_eq!(p.gradient(m, m), 0.0);
        for d in [0.5, 3.0, 20.0, 60.0] {
            assert!(p.gradient(m - d, m) < 0.0);
            assert!(p.gradient(m + d, m) > 0.0);
            assert!(p.gradient(m + d, m).abs() > p.gradient(m - d, m).abs());
            // Derivative agrees with the potential (C¹ check by central difference).
            let h = 1e-5;
            for x in [m - d, m + d] {
                let fd = (p.value(x + h, m) - p.value(x - h, m)) / (2.0 * h);
                assert!((fd - p.gradient(x, m)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn noiseless_base_sits_at_minimum() {
        let x = simulate_base(&quiet(Scenario::Constant)).unwrap();
        assert!(x.iter().all(|&v| v == 155.0));
    }

    #[test]
    fn noiseless_step_relaxes_monotonically() {
        let cfg = quiet(Scenario::StepChange);
        let x = simulate_base(&cfg).unwrap();
        let t_star = (cfg.shape.step_fraction * cfg.duration as f64).ceil() as usize;
        assert!(x[..=t_star].iter().all(|&v| v == cfg.shape.rest_level));
        for w in x[t_star..].windows(2) {
            assert!(w[1] >= w[0] && w[1] <= cfg.shape.work_level);
        }
        assert!(
            x.last().unwrap()
                > &(cfg.shape.rest_level + 0.5 * (cfg.shape.work_level - cfg.shape.rest_level))
        );
    }

    #[test]
    fn base_is_centred_and_asymmetric() {
        let (mut up, mut down, mut mean) = (0.0, 0.0, 0.0);
        let seeds = 20;
        for seed in 0..seeds {
            let cfg = ScenarioConfig {
                duration: 10_000,
                seed,
                ..ScenarioConfig::default()
            };
            let x = simulate_base(&cfg).unwrap();
            let m = cfg.potential.minimum;
            mean += x.iter().sum::<f64>() / x.len() as f64;
            let above: Vec<f64> = x.iter().filter(|&&v| v > m).map(|v| v - m).collect();
            let below: Vec<f64> = x.iter().filter(|&&v| v < m).map(|v| m - v).collect();
            up += above.iter().sum::<f64>() / above.len() as f64;
            down += below.iter().sum::<f64>() / below.len() as f64;
        }
        assert!(up < down);
        let mean = mean / seeds as f64;
        assert!(
            (mean - PotentialSurface::default().minimum).abs() <= 2.0,
            "mean {mean}"
        );
    }

    #[test]
    fn zero_beta_gives_zero_noise() {
        let y = simulate_noise(&quiet(Scenario::Heteroscedastic)).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ou_variance_matches_stationary_value() {
        let cfg = ScenarioConfig {
            duration: 50_000,
            noise: NoiseSchedule {
                alpha: 0.05,
                beta_quiet: 1.0,
                beta_noisy: 1.0,
            },
            seed: 3,
            ..ScenarioConfig::default()
        };
        let y = simulate_noise(&cfg).unwrap();
        let target = 1.0 / (2.0 * 0.05);
        let v = variance(&y[1000..]);
        assert!(
            (v - target).abs() / target < 0.15,
            "variance {v} vs {target}"
        );
    }

    #[test]
    fn noisy_window_is_much_noisier() {
        let cfg = ScenarioConfig::with_scenario(Scenario::Heteroscedastic, 8);
        let y = simulate_noise(&cfg).unwrap();
        let block = cfg.shape.noisy_block;
        assert!(variance(&y[50..block]) >= 4.0 * variance(&y[block + 50..]));
    }

    #[test]
    fn zero_rate_gives_no_spikes() {
        let cfg = quiet(Scenario::Constant);
        let x = simulate_base(&cfg).unwrap();
        let (z, truth) = simulate_spikes(&x, &cfg).unwrap();
        assert!(truth.is_empty());
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn thinning_guard() {
        let cfg = ScenarioConfig {
            spike_rate: RateFunction::constant(2000.0),
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            simulate_spikes(&[150.0; 400], &cfg),
            Err(SimError::RateTooHigh { .. })
        ));
    }

    #[test]
    fn homogeneous_rate_is_recovered() {
        // 10 000 hours of exposure in total, fed through the thinning sampler.
        let hours = 10_000usize;
        let chunk = 100 * 3600;
        let total: usize = (0..hours / 100)
            .into_par_iter()
            .map(|seed| {
                let cfg = ScenarioConfig {
                    spike_rate: RateFunction::constant(6.0),
                    seed: seed as u64,
                    ..ScenarioConfig::default()
                };
                simulate_spikes(&vec![150.0; chunk], &cfg).unwrap().1.len()
            })
            .sum();
        let rate = total as f64 / hours as f64;
        assert!((rate - 6.0).abs() / 6.0 < 0.02, "rate {rate}");
    }

    #[test]
    fn step_rate_matches_binned_exposure() {
        let rate = RateFunction::step(150.0, 0.0, 12.0);
        let (mut counts, mut exposure) = (vec![0u64; 2], vec![0u64; 2]);
        for seed in 0..40 {
            let cfg = ScenarioConfig {
                scenario: Scenario::IntervalTraining,
                spike_rate: rate.clone(),
                seed,
                ..ScenarioConfig::default()
            };
            let x = simulate_base(&cfg).unwrap();
            let (_, truth) = simulate_spikes(&x, &cfg).unwrap();
            for s in &truth {
                counts[rate.bin_of(s.base_hr)] += 1;
            }
            let e = rate.exposure(&x);
            assert_eq!(e.iter().sum::<u64>(), cfg.duration as u64);
            exposure[0] += e[0];
            exposure[1] += e[1];
        }
        assert_eq!(counts[0], 0);
        let expected = 12.0 * exposure[1] as f64 / 3600.0;
        let sd = expected.sqrt();
        assert!(
            (counts[1] as f64 - expected).abs() <= 1.96 * sd,
            "{} vs {expected}",
            counts[1]
        );
    }

    #[test]
    fn assembly_of_constant_base() {
        let cfg = quiet(Scenario::Constant);
        let act = assemble(vec![150.4; 400], &[0.0; 400], &[0.0; 400], Vec::new(), &cfg).unwrap();
        assert!(act.series.samples().iter().all(|&v| v == 150.0));
    }

    #[test]
    fn assembled_spike_follows_impulse_response() {
        let cfg = ScenarioConfig {
            assembly_width: 5,
            ..quiet(Scenario::Constant)
        };
        let mut z = vec![0.0; 400];
        z[200] = 20.0;
        let act = assemble(vec![140.0; 400], &[0.0; 400], &z, Vec::new(), &cfg).unwrap();
        let peak = act
            .series
            .samples()
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        assert_eq!(peak - 140.0, (20.0f64 / 5.0).round());
        assert_eq!(act.series.samples()[197], 140.0);
        assert_eq!(act.series.samples()[198], 144.0);
    }

    #[test]
    fn truth_matches_injected_heights() {
        let cfg = ScenarioConfig {
            spike_rate: RateFunction::constant(60.0),
            seed: 4,
            ..ScenarioConfig::default()
        };
        let base = simulate_base(&cfg).unwrap();
        let noise = simulate_noise(&cfg).unwrap();
        let (z, truth) = simulate_spikes(&base, &cfg).unwrap();
        assert!(!truth.is_empty());
        for s in &truth {
            let t = s.time as usize;
            let with = (base[t] + noise[t]) + z[t];
            assert!((with - (base[t] + noise[t]) - s.height).abs() < 1e-9);
            assert!(s.height > 0.0 && s.time < cfg.duration as f64);
            assert_eq!(s.base_hr, base[t]);
        }
    }

    #[test]
    fn reproducible_and_streams_independent() {
        let cfg = ScenarioConfig::with_scenario(Scenario::Combined, 42);
        let a = simulate_activity(&cfg).unwrap();
        let b = simulate_activity(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a.truth).unwrap(),
            serde_json::to_string(&b.truth).unwrap()
        );
        let other = ScenarioConfig {
            spike_seed: Some(7),
            ..cfg.clone()
        };
        let c = simulate_activity(&other).unwrap();
        assert_eq!(a.base, c.base);
        assert_eq!(
            simulate_noise(&cfg).unwrap(),
            simulate_noise(&other).unwrap()
        );
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn rejects_short_or_malformed_configs() {
        let short = ScenarioConfig {
            duration: 299,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            simulate_activity(&short),
            Err(SimError::InvalidConfig(_))
        ));
        let symmetric = ScenarioConfig {
            potential: PotentialSurface {
                k_left: 0.01,
                k_right: 0.01,
                ..PotentialSurface::default()
            },
            ..ScenarioConfig::default()
        };
        assert!(symmetric.validate().is_err());
        let negative = ScenarioConfig {
            spike_rate: RateFunction::constant(-1.0),
            ..ScenarioConfig::default()
        };
        assert!(negative.validate().is_err());
    }

    #[test]
    fn unstable_integration_is_reported() {
        let cfg = ScenarioConfig {
            sigma: 400.0,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            simulate_base(&cfg),
            Err(SimError::UnstableIntegration { .. })
        ));
    }

    #[test]
    fn batch_cycles_scenarios_and_seeds() {
        let configs = batch_configs(&ScenarioConfig::default(), 7, 100);
        assert_eq!(configs[0].scenario, Scenario::Constant);
        assert_eq!(configs[5].scenario, Scenario::Constant);
        assert_eq!(configs[6].seed, 106);
        let batch = simulate_batch(&configs[..3]).unwrap();
        assert_eq!(batch[2], simulate_activity(&configs[2]).unwrap());
    }
}
