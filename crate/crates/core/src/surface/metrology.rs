//! Profile filtering, Ra, and per-channel normalization.

use crate::error::{Error, Result};
use crate::transform::TimeSeriesBatch;

/// `sqrt(ln 2 / pi)`: puts the 50% transmission point of the Gaussian
/// profile filter at the cutoff wavelength.
pub const GAUSSIAN_FILTER_ALPHA: f64 = 0.469_718_639_349_825_8;

/// Measured height profile, heights in µm, samples `spacing` µm apart.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    pub heights: Vec<f64>,
    pub spacing: f64,
}

impl SurfaceProfile {
    pub fn new(heights: Vec<f64>, spacing: f64) -> Result<Self> {
        if heights.len() < 2 {
            return Err(Error::param("a profile needs at least 2 samples"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param(format!("spacing must be positive, got {spacing}")));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::param("profile contains non-finite heights"));
        }
        Ok(SurfaceProfile { heights, spacing })
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }
}

/// Half-width, in samples, of the truncated Gaussian weighting function.
pub fn filter_half_width(cutoff: f64, spacing: f64) -> usize {
    (cutoff / spacing).floor() as usize
}

/// Gaussian weights at offsets `-h..=h` samples, unnormalized.
fn gaussian_weights(cutoff: f64, spacing: f64) -> Vec<f64> {
    let h = filter_half_width(cutoff, spacing) as isize;
    let width = GAUSSIAN_FILTER_ALPHA * cutoff;
    (-h..=h)
        .map(|k| {
            let x = k as f64 * spacing / width;
            (-std::f64::consts::PI * x * x).exp()
        })
        .collect()
}

fn check_filter_args(profile: &SurfaceProfile, cutoff: f64) -> Result<()> {
    if !(cutoff.is_finite() && cutoff > 2.0 * profile.spacing) {
        return Err(Error::param(format!(
            "cutoff {cutoff} must exceed twice the spacing {}",
            profile.spacing
        )));
    }
    if (profile.len() as f64) < cutoff / profile.spacing {
        return Err(Error::param(format!(
            "profile of {} samples is shorter than the cutoff ({} samples)",
            profile.len(),
            cutoff / profile.spacing
        )));
    }
    Ok(())
}

/// Mean line from the Gaussian weighting function, truncated at ±cutoff.
/// Near the ends the kernel is cut to the available samples and
/// renormalized.
pub fn gaussian_mean_line(profile: &SurfaceProfile, cutoff: f64) -> Result<Vec<f64>> {
    check_filter_args(profile, cutoff)?;
    let weights = gaussian_weights(cutoff, profile.spacing);
    let h = filter_half_width(cutoff, profile.spacing) as isize;
    let n = profile.len() as isize;
    let z = &profile.heights;
    Ok((0..n)
        .map(|i| {
            let lo = (i - h).max(0);
            let hi = (i + h).min(n - 1);
            let mut num = 0.0;
            let mut den = 0.0;
            for p in lo..=hi {
                let w = weights[(p - i + h) as usize];
                num += w * z[p as usize];
                den += w;
            }
            num / den
        })
        .collect())
}

/// Roughness profile: the input minus its Gaussian mean line.
pub fn highpass_filter(profile: &SurfaceProfile, cutoff: f64) -> Result<SurfaceProfile> {
    let mean_line = gaussian_mean_line(profile, cutoff)?;
    Ok(SurfaceProfile {
        heights: profile.heights.iter().zip(&mean_line).map(|(z, m)| z - m).collect(),
        spacing: profile.spacing,
    })
}

/// Arithmetic mean deviation of a profile.
///
/// With a cutoff the profile is high-pass filtered first and Ra is taken
/// over the central region, one filter half-width in from each end.
pub fn compute_ra(profile: &SurfaceProfile, cutoff: Option<f64>) -> Result<f64> {
    let region: Vec<f64> = match cutoff {
        None => profile.heights.clone(),
        Some(c) => {
            let rough = highpass_filter(profile, c)?;
            let h = filter_half_width(c, profile.spacing);
            if rough.len() <= 2 * h {
                return Err(Error::param(format!(
                    "profile of {} samples has no central region for cutoff {c}",
                    rough.len()
                )));
            }
            rough.heights[h..rough.len() - h].to_vec()
        }
    };
    Ok(mean_abs_deviation(&region))
}

pub(crate) fn mean_abs_deviation(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    z.iter().map(|v| (v - mean).abs()).sum::<f64>() / n
}

/// Centers each channel of each example at zero and scales it to unit
/// population standard deviation. Constant channels become all zeros.
pub fn normalize_per_channel(batch: &TimeSeriesBatch) -> TimeSeriesBatch {
    let mut out = batch.clone();
    let t = batch.n_timesteps();
    if t == 0 {
        return out;
    }
    for channel in out.data_mut().chunks_mut(t) {
        let n = t as f64;
        let mean = channel.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = channel.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            channel.fill(0.0);
        } else {
            for v in channel.iter_mut() {
                *v = ((*v as f64 - mean) / sd) as f32;
            }
        }
    }
    out
}
