//! Random kernel bank: generation, validation, and JSON persistence.
//!
//! Every kernel is drawn from a single seeded ChaCha stream in a fixed order
//! (length, channel count, channel indices, weights, bias, dilation, padding),
//! so a seed reproduces the bank exactly. Exchanging kernels with other
//! implementations goes through the JSON file, not through the seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel lengths the generator draws from, uniformly.
pub const KERNEL_LENGTHS: [usize; 3] = [7, 9, 11];

/// Shortest series the generator accepts: the longest kernel at dilation 1.
pub const MIN_INPUT_LENGTH: usize = 11;

/// Current version of the kernel-set file layout.
pub const KERNEL_FORMAT_VERSION: u32 = 1;

/// Tolerance on |sum of weights| for a kernel to count as mean-centered.
pub const WEIGHT_SUM_TOLERANCE: f32 = 1e-4;

/// One random dilated convolution kernel.
///
/// `weights` is row-major by selected channel, then tap: the weight for the
/// `r`-th entry of `channel_indices` at tap `j` is `weights[r * length + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub length: usize,
    pub dilation: usize,
    /// Zeros added on each side of the series; 0 or half the receptive span.
    pub padding: usize,
    pub bias: f32,
    pub channel_indices: Vec<usize>,
    pub weights: Vec<f32>,
}

impl Kernel {
    /// Distance between the first and last tap, `(length - 1) * dilation`.
    pub fn span(&self) -> usize {
        (self.length - 1) * self.dilation
    }

    /// Padding that keeps the output as long as the input.
    pub fn same_padding(&self) -> usize {
        self.span() / 2
    }

    /// Number of outputs produced for a series of `n_timesteps`, or `None`
    /// when the receptive field does not fit the padded series.
    pub fn output_length(&self, n_timesteps: usize) -> Option<usize> {
        (n_timesteps + 2 * self.padding).checked_sub(self.span())
    }

    /// Weights for the `r`-th selected channel.
    pub fn channel_weights(&self, r: usize) -> &[f32] {
        &self.weights[r * self.length..(r + 1) * self.length]
    }

    /// Checks every structural invariant against a bank's channel count and
    /// input length hint.
    pub fn validate(&self, num_channels: usize, input_length: usize) -> std::result::Result<(), String> {
        if !KERNEL_LENGTHS.contains(&self.length) {
            return Err(format!("length {} not in {{7, 9, 11}}", self.length));
        }
        if self.dilation == 0 {
            return Err("dilation must be positive".into());
        }
        if !(self.bias.is_finite() && (-1.0..=1.0).contains(&self.bias)) {
            return Err(format!("bias {} outside [-1, 1]", self.bias));
        }
        if self.channel_indices.is_empty() || self.channel_indices.len() > num_channels {
            return Err(format!(
                "{} channel indices for {} channels",
                self.channel_indices.len(),
                num_channels
            ));
        }
        for pair in self.channel_indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(format!("duplicate channel index {}", pair[0]));
            }
            if pair[0] > pair[1] {
                return Err("channel indices are not sorted".into());
            }
        }
        if let Some(&last) = self.channel_indices.last() {
            if last >= num_channels {
                return Err(format!("channel index {last} out of range for {num_channels} channels"));
            }
        }
        let expected = self.channel_indices.len() * self.length;
        if self.weights.len() != expected {
            return Err(format!("{} weights, expected {}", self.weights.len(), expected));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err("non-finite weight".into());
        }
        let sum: f32 = self.weights.iter().sum();
        if sum.abs() > WEIGHT_SUM_TOLERANCE {
            return Err(format!("weights sum to {sum}, not mean-centered"));
        }
        if self.span() + 1 > input_length {
            return Err(format!(
                "receptive span {} does not fit input length {}",
                self.span(),
                input_length
            ));
        }
        if self.padding != 0 && self.padding != self.same_padding() {
            return Err(format!(
                "padding {} is neither 0 nor {}",
                self.padding,
                self.same_padding()
            ));
        }
        Ok(())
    }
}

/// Immutable, ordered bank of kernels. Order is generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub kernels: Vec<Kernel>,
    pub num_channels: usize,
    pub input_length_hint: usize,
    pub seed: u64,
}

impl KernelSet {
    pub fn count(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Kernel> {
        self.kernels.iter()
    }

    /// Builds a set from explicit kernels, validating each one.
    pub fn from_kernels(
        kernels: Vec<Kernel>,
        num_channels: usize,
        input_length_hint: usize,
        seed: u64,
    ) -> Result<Self> {
        for (index, kernel) in kernels.iter().enumerate() {
            kernel
                .validate(num_channels, input_length_hint)
                .map_err(|reason| Error::KernelFormat { index, reason })?;
        }
        Ok(KernelSet {
            kernels,
            num_channels,
            input_length_hint,
            seed,
        })
    }
}

/// Draws `num_kernels` random kernels for series of `input_length` steps
/// with `num_channels` channels.
pub fn generate_kernels(
    seed: u64,
    num_kernels: usize,
    input_length: usize,
    num_channels: usize,
) -> Result<KernelSet> {
    if num_channels < 1 {
        return Err(Error::param("num_channels must be at least 1"));
    }
    if input_length < MIN_INPUT_LENGTH {
        return Err(Error::param(format!(
            "input_length {input_length} is shorter than the minimum {MIN_INPUT_LENGTH}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel_limit = (num_channels as f64).log2();
    let kernels = (0..num_kernels)
        .map(|_| draw_kernel(&mut rng, input_length, num_channels, channel_limit))
        .collect();

    Ok(KernelSet {
        kernels,
        num_channels,
        input_length_hint: input_length,
        seed,
    })
}

fn draw_kernel(
    rng: &mut ChaCha8Rng,
    input_length: usize,
    num_channels: usize,
    channel_limit: f64,
) -> Kernel {
    let length = KERNEL_LENGTHS[rng.random_range(0..KERNEL_LENGTHS.len())];

    let n_selected = if num_channels == 1 {
        1
    } else {
        let u = rng.random::<f64>() * channel_limit;
        (2f64.powf(u).floor() as usize).clamp(1, num_channels)
    };
    let mut channel_indices = index::sample(rng, num_channels, n_selected).into_vec();
    channel_indices.sort_unstable();

    let mut weights: Vec<f32> = (0..n_selected * length)
        .map(|_| rng.sample::<f32, _>(StandardNormal))
        .collect();
    let mean = weights.iter().map(|&w| w as f64).sum::<f64>() / weights.len() as f64;
    for w in &mut weights {
        *w = (*w as f64 - mean) as f32;
    }

    let bias = rng.random_range(-1.0f32..1.0);

    let dilation_limit = ((input_length - 1) as f64 / (length - 1) as f64).log2();
    let x = rng.random::<f64>() * dilation_limit;
    let dilation = (2f64.powf(x).floor() as usize).max(1);

    let padding = if rng.random::<bool>() {
        (length - 1) * dilation / 2
    } else {
        0
    };

    Kernel {
        length,
        dilation,
        padding,
        bias,
        channel_indices,
        weights,
    }
}

#[derive(Serialize)]
struct KernelFileOut<'a> {
    format_version: u32,
    seed: u64,
    num_channels: usize,
    input_length_hint: usize,
    kernels: &'a [Kernel],
}

#[derive(Deserialize)]
struct KernelFileIn {
    format_version: u32,
    seed: u64,
    num_channels: usize,
    input_length_hint: usize,
    kernels: Vec<serde_json::Value>,
}

/// Writes a kernel set as JSON.
pub fn save_kernels(set: &KernelSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_kernels(set, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Serializes a kernel set to any writer. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_kernels(set: &KernelSet, mut out: impl Write) -> Result<()> {
    let file = KernelFileOut {
        format_version: KERNEL_FORMAT_VERSION,
        seed: set.seed,
        num_channels: set.num_channels,
        input_length_hint: set.input_length_hint,
        kernels: &set.kernels,
    };
    serde_json::to_writer(&mut out, &file).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads and re-validates a kernel set written by [`save_kernels`].
pub fn load_kernels(path: impl AsRef<Path>) -> Result<KernelSet> {
    let reader = BufReader::new(File::open(path)?);
    let file: KernelFileIn =
        serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))?;
    parse_kernel_file(file)
}

/// Parses a kernel set from an in-memory JSON string.
pub fn kernels_from_str(text: &str) -> Result<KernelSet> {
    let file: KernelFileIn =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    parse_kernel_file(file)
}

fn parse_kernel_file(file: KernelFileIn) -> Result<KernelSet> {
    if file.format_version != KERNEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    if file.num_channels < 1 {
        return Err(Error::Format("num_channels must be at least 1".into()));
    }
    let kernels = file
        .kernels
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            serde_json::from_value::<Kernel>(value).map_err(|e| Error::KernelFormat {
                index,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KernelSet::from_kernels(kernels, file.num_channels, file.input_length_hint, file.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_kernel() -> Kernel {
        Kernel {
            length: 7,
            dilation: 1,
            padding: 0,
            bias: 0.25,
            channel_indices: vec![0],
            weights: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(generate_kernels(1, 10, 100, 0), Err(Error::Parameter(_))));
        assert!(matches!(generate_kernels(1, 10, 10, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn empty_set() {
        let set = generate_kernels(9, 0, 100, 1).unwrap();
        assert_eq!(set.count(), 0);
        assert!(set.is_empty());
    }

    #[test]
    fn univariate_kernels_fit_and_use_channel_zero() {
        let set = generate_kernels(3, 1000, 512, 1).unwrap();
        assert_eq!(set.count(), 1000);
        for k in set.iter() {
            assert_eq!(k.channel_indices, vec![0]);
            assert!(k.span() <= 511);
            k.validate(1, 512).unwrap();
        }
    }

    #[test]
    fn full_scale_bank_has_expected_lengths() {
        let set = generate_kernels(2024, 10_000, 50_000, 20).unwrap();
        assert_eq!(set.count(), 10_000);
        assert!(set.iter().all(|k| KERNEL_LENGTHS.contains(&k.length)));
        assert!(set.iter().all(|k| k.validate(20, 50_000).is_ok()));
    }

    #[test]
    fn minimal_input_length_forces_dilation_one() {
        let set = generate_kernels(5, 200, 11, 3).unwrap();
        for k in set.iter() {
            assert!(k.span() <= 10);
            if k.length == 11 {
                assert_eq!(k.dilation, 1);
            }
        }
    }

    #[test]
    fn validate_catches_each_invariant() {
        let good = tiny_kernel();
        good.validate(2, 64).unwrap();

        let mut k = good.clone();
        k.bias = 1.5;
        assert!(k.validate(2, 64).unwrap_err().contains("bias"));

        let mut k = good.clone();
        k.channel_indices = vec![1, 1];
        k.weights = [good.weights.clone(), good.weights.clone()].concat();
        assert!(k.validate(2, 64).unwrap_err().contains("duplicate"));

        let mut k = good.clone();
        k.weights[0] += 1.0;
        assert!(k.validate(2, 64).unwrap_err().contains("mean-centered"));

        let mut k = good.clone();
        k.dilation = 20;
        assert!(k.validate(2, 64).unwrap_err().contains("receptive"));

        let mut k = good.clone();
        k.padding = 2;
        assert!(k.validate(2, 64).unwrap_err().contains("padding"));

        let mut k = good.clone();
        k.length = 8;
        assert!(k.validate(2, 64).is_err());

        let mut k = good;
        k.channel_indices = vec![2];
        assert!(k.validate(2, 64).unwrap_err().contains("out of range"));
    }

    #[test]
    fn load_rejects_bias_out_of_range_with_index() {
        let set = generate_kernels(11, 3, 64, 2).unwrap();
        let mut text = Vec::new();
        write_kernels(&set, &mut text).unwrap();
        let mut value: serde_json::Value = serde_json::from_slice(&text).unwrap();
        value["kernels"][2]["bias"] = serde_json::json!(1.5);
        match kernels_from_str(&value.to_string()) {
            Err(Error::KernelFormat { index, reason }) => {
                assert_eq!(index, 2);
                assert!(reason.contains("bias"));
            }
            other => panic!("expected kernel format error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_channels() {
        let set = KernelSet {
            kernels: vec![tiny_kernel()],
            num_channels: 2,
            input_length_hint: 64,
            seed: 0,
        };
        let mut text = Vec::new();
        write_kernels(&set, &mut text).unwrap();
        let mut value: serde_json::Value = serde_json::from_slice(&text).unwrap();
        value["kernels"][0]["channel_indices"] = serde_json::json!([1, 1]);
        let w = value["kernels"][0]["weights"].as_array().unwrap().clone();
        value["kernels"][0]["weights"] = serde_json::Value::Array([w.clone(), w].concat());
        assert!(matches!(
            kernels_from_str(&value.to_string()),
            Err(Error::KernelFormat { index: 0, .. })
        ));
    }

    #[test]
    fn load_rejects_schema_and_version_problems() {
        assert!(matches!(kernels_from_str("{"), Err(Error::Format(_))));
        let bad_version = r#"{"format_version":2,"seed":0,"num_channels":1,"input_length_hint":20,"kernels":[]}"#;
        assert!(matches!(kernels_from_str(bad_version), Err(Error::Format(_))));
        let bad_kernel = r#"{"format_version":1,"seed":0,"num_channels":1,"input_length_hint":20,"kernels":[{"length":"seven"}]}"#;
        assert!(matches!(
            kernels_from_str(bad_kernel),
            Err(Error::KernelFormat { index: 0, .. })
        ));
    }

    #[test]
    fn empty_set_serializes_with_empty_kernel_list() {
        let set = generate_kernels(1, 0, 100, 1).unwrap();
        let mut text = Vec::new();
        write_kernels(&set, &mut text).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&text).unwrap();
        assert_eq!(value["kernels"], serde_json::json!([]));
        assert_eq!(value["format_version"], serde_json::json!(1));
        assert_eq!(kernels_from_str(std::str::from_utf8(&text).unwrap()).unwrap(), set);
    }
}
