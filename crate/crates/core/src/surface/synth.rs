//! Synthetic laser-reflection dataset with Ra labels.
//!
//! Forward model, per sample:
//!
//! 1. A height profile is drawn as white noise smoothed by a Gaussian of
//!    standard deviation `correlation_length`, then scaled so the Ra of the
//!    measured window hits a target drawn from `target_ra_range`. The profile
//!    extends one filter half-width beyond the window on each side so the
//!    label can be evaluated with the full Gaussian filter.
//! 2. Slopes between consecutive samples give a mirror-reflection angle
//!    `atan(2 * slope)` per timestep.
//! 3. Each sensor sits at a fixed angle on an arc and records a Gaussian
//!    lobe of the reflected beam, scaled by its gain, plus noise, clamped to
//!    `0..=255` and rounded. Some sensors are partially occluded, which
//!    scales their gain down.
//! 4. The label is the filtered Ra of the measured window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::metrology::{compute_ra, filter_half_width, mean_abs_deviation, SurfaceProfile};
use crate::error::{Error, Result};
use crate::transform::TimeSeriesBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub n_channels: usize,
    pub n_timesteps: usize,
    /// Ra targets are drawn uniformly from `[min, max]` µm.
    pub target_ra_range: [f64; 2],
    /// Intensity noise standard deviation, in 0..255 units.
    pub sensor_noise_sd: f64,
    pub per_channel_gain_range: [f64; 2],
    pub occlusion_probability: f64,
    /// Standard deviation of the Gaussian smoothing kernel, µm.
    pub correlation_length: f64,
    /// Distance between timesteps, µm.
    pub spacing: f64,
    /// Roughness cutoff used for the labels, µm.
    pub cutoff: f64,
    /// Angular span of the sensor arc, radians.
    pub sensor_arc: f64,
    /// Angular standard deviation of each sensor's response lobe, radians.
    pub angular_width: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_samples: 200,
            n_channels: 20,
            n_timesteps: 2000,
            target_ra_range: [0.605, 1.834],
            sensor_noise_sd: 6.0,
            per_channel_gain_range: [0.8, 1.2],
            occlusion_probability: 0.05,
            correlation_length: 10.0,
            spacing: 0.8,
            cutoff: 800.0,
            sensor_arc: 1.6,
            angular_width: 0.06,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.target_ra_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param(format!("target_ra_range [{lo}, {hi}] must satisfy 0 < min <= max")));
        }
        if !(0.0..=1.0).contains(&self.occlusion_probability) {
            return Err(Error::param("occlusion_probability must lie in [0, 1]"));
        }
        let [glo, ghi] = self.per_channel_gain_range;
        if !(glo > 0.0 && glo <= ghi && ghi.is_finite()) {
            return Err(Error::param("per_channel_gain_range must satisfy 0 < min <= max"));
        }
        if self.n_channels < 1 {
            return Err(Error::param("n_channels must be at least 1"));
        }
        if self.n_timesteps < 2 {
            return Err(Error::param("n_timesteps must be at least 2"));
        }
        if !(self.sensor_noise_sd >= 0.0 && self.sensor_noise_sd.is_finite()) {
            return Err(Error::param("sensor_noise_sd must be non-negative"));
        }
        for (name, v) in [
            ("correlation_length", self.correlation_length),
            ("spacing", self.spacing),
            ("angular_width", self.angular_width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be positive")));
            }
        }
        if !(self.sensor_arc.is_finite() && self.sensor_arc >= 0.0) {
            return Err(Error::param("sensor_arc must be non-negative"));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 2.0 * self.spacing) {
            return Err(Error::param("cutoff must exceed twice the spacing"));
        }
        Ok(())
    }

    /// Samples in the generated height profile: the measured window of
    /// `n_timesteps + 1` heights plus one filter half-width on each side.
    pub fn profile_len(&self) -> usize {
        self.n_timesteps + 1 + 2 * filter_half_width(self.cutoff, self.spacing)
    }

    fn sensor_angle(&self, c: usize) -> f64 {
        if self.n_channels == 1 {
            0.0
        } else {
            -self.sensor_arc / 2.0 + self.sensor_arc * c as f64 / (self.n_channels - 1) as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub batch: TimeSeriesBatch,
    pub labels: Vec<f64>,
    pub profiles: Vec<SurfaceProfile>,
}

pub fn generate_dataset(config: &SynthConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let smoother = smoothing_kernel(config.correlation_length / config.spacing);
    let margin = filter_half_width(config.cutoff, config.spacing);
    let window = margin..margin + config.n_timesteps + 1;

    let mut data = Vec::with_capacity(config.n_samples * config.n_channels * config.n_timesteps);
    let mut labels = Vec::with_capacity(config.n_samples);
    let mut profiles = Vec::with_capacity(config.n_samples);

    for _ in 0..config.n_samples {
        let [lo, hi] = config.target_ra_range;
        let target = if lo == hi { lo } else { rng.random_range(lo..=hi) };

        let mut heights = smoothed_noise(&mut rng, config.profile_len(), &smoother);
        let scale = target / mean_abs_deviation(&heights[window.clone()]);
        for h in &mut heights {
            *h *= scale;
        }
        let profile = SurfaceProfile::new(heights, config.spacing)?;
        labels.push(compute_ra(&profile, Some(config.cutoff))?);

        let angles: Vec<f64> = profile.heights[window.clone()]
            .windows(2)
            .map(|w| (2.0 * (w[1] - w[0]) / config.spacing).atan())
            .collect();

        let gains: Vec<f64> = (0..config.n_channels)
            .map(|_| {
                let [glo, ghi] = config.per_channel_gain_range;
                let mut g = if glo == ghi { glo } else { rng.random_range(glo..=ghi) };
                if rng.random::<f64>() < config.occlusion_probability {
                    g *= rng.random_range(0.2..=0.7);
                }
                g
            })
            .collect();

        let two_var = 2.0 * config.angular_width * config.angular_width;
        for (c, gain) in gains.iter().enumerate() {
            let center = config.sensor_angle(c);
            for &theta in &angles {
                let noise: f64 = rng.sample(StandardNormal);
                let d = theta - center;
                let intensity = gain * 255.0 * (-d * d / two_var).exp() + config.sensor_noise_sd * noise;
                data.push(intensity.clamp(0.0, 255.0).round() as f32);
            }
        }
        profiles.push(profile);
    }

    let batch = TimeSeriesBatch::new(data, config.n_samples, config.n_channels, config.n_timesteps)?;
    Ok(SyntheticDataset {
        batch,
        labels,
        profiles,
    })
}

fn smoothing_kernel(sigma_samples: f64) -> Vec<f64> {
    let half = (4.0 * sigma_samples).ceil().max(1.0) as isize;
    let w: Vec<f64> = (-half..=half)
        .map(|k| (-0.5 * (k as f64 / sigma_samples).powi(2)).exp())
        .collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.into_iter().map(|v| v / norm).collect()
}

fn smoothed_noise(rng: &mut ChaCha8Rng, len: usize, kernel: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = (0..len + kernel.len() - 1).map(|_| rng.sample(StandardNormal)).collect();
    raw.windows(kernel.len())
        .map(|w| w.iter().zip(kernel).map(|(a, b)| a * b).sum())
        .collect()
}
