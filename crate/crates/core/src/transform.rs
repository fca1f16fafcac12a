//! Batched random-kernel transform: dilated multivariate cross-correlation
//! followed by global pooling.
//!
//! Work is split over examples and, within each example, over kernels. Each
//! `(example, kernel)` feature pair is produced by exactly one task with a
//! fixed summation order, so the output is bit-identical for any worker
//! count.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernelgen::{Kernel, KernelSet};
use crate::pooling::{self, PoolingConfig, PoolingMode};

/// `N x C x T` block of `f32` samples stored `[example][channel][timestep]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesBatch {
    data: Vec<f32>,
    n_examples: usize,
    n_channels: usize,
    n_timesteps: usize,
}

impl TimeSeriesBatch {
    pub fn new(data: Vec<f32>, n_examples: usize, n_channels: usize, n_timesteps: usize) -> Result<Self> {
        let expected = n_examples
            .checked_mul(n_channels)
            .and_then(|v| v.checked_mul(n_timesteps))
            .ok_or_else(|| Error::param("batch shape overflows"))?;
        if data.len() != expected {
            return Err(Error::param(format!(
                "batch data has {} values, shape {}x{}x{} needs {}",
                data.len(),
                n_examples,
                n_channels,
                n_timesteps,
                expected
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite batch value at flat index {pos}")));
        }
        Ok(TimeSeriesBatch {
            data,
            n_examples,
            n_channels,
            n_timesteps,
        })
    }

    pub fn empty(n_channels: usize, n_timesteps: usize) -> Self {
        TimeSeriesBatch {
            data: Vec::new(),
            n_examples: 0,
            n_channels,
            n_timesteps,
        }
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    fn example_len(&self) -> usize {
        self.n_channels * self.n_timesteps
    }

    /// One example as a `C x T` slice.
    pub fn example(&self, i: usize) -> &[f32] {
        let len = self.example_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn channel(&self, i: usize, c: usize) -> &[f32] {
        let start = i * self.example_len() + c * self.n_timesteps;
        &self.data[start..start + self.n_timesteps]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// New batch holding the listed examples, in the listed order.
    pub fn select(&self, rows: &[usize]) -> TimeSeriesBatch {
        let mut data = Vec::with_capacity(rows.len() * self.example_len());
        for &r in rows {
            data.extend_from_slice(self.example(r));
        }
        TimeSeriesBatch {
            data,
            n_examples: rows.len(),
            n_channels: self.n_channels,
            n_timesteps: self.n_timesteps,
        }
    }

    /// Stacks batches of identical channel and timestep shape.
    pub fn concat(parts: &[TimeSeriesBatch]) -> Result<TimeSeriesBatch> {
        let Some(first) = parts.first() else {
            return Err(Error::param("cannot concatenate zero batches"));
        };
        let mut data = Vec::new();
        let mut n = 0;
        for part in parts {
            if part.n_channels != first.n_channels || part.n_timesteps != first.n_timesteps {
                return Err(Error::param("concatenated batches differ in shape"));
            }
            data.extend_from_slice(&part.data);
            n += part.n_examples;
        }
        Ok(TimeSeriesBatch {
            data,
            n_examples: n,
            n_channels: first.n_channels,
            n_timesteps: first.n_timesteps,
        })
    }
}

/// Row-major `N x F` feature block.
///
/// With max pooling enabled, kernel `k` occupies columns `2k` (PPV) and
/// `2k + 1` (max); otherwise column `k` is its PPV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f32>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f32>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::param(format!(
                "feature matrix has {} values, shape {}x{} needs {}",
                values.len(),
                n_rows,
                n_cols,
                n_rows * n_cols
            )));
        }
        Ok(FeatureMatrix { values, n_rows, n_cols })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        FeatureMatrix {
            values: vec![0.0; n_rows * n_cols],
            n_rows,
            n_cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.n_cols + j]
    }

    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            values,
            n_rows: rows.len(),
            n_cols: self.n_cols,
        }
    }

    /// Largest absolute elementwise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &FeatureMatrix) -> Option<f32> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f32::max),
        )
    }

    /// CSV with header `example_id,f0,...` and one row per example; floats
    /// print in their shortest round-trip form.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut header = String::from("example_id");
        for j in 0..self.n_cols {
            header.push_str(&format!(",f{j}"));
        }
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for i in 0..self.n_rows {
            line.clear();
            line.push_str(&i.to_string());
            for v in self.row(i) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// How the transform distributes work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over examples and kernels. `None` uses the global pool.
    /// Without the `parallel` feature this runs sequentially.
    Parallel { workers: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { workers: None }
        } else {
            Execution::Sequential
        }
    }
}

/// Transform runner bound to an execution strategy. Holds its own thread
/// pool when a worker count is requested.
pub struct Engine {
    execution: Execution,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Engine {
    pub fn new(execution: Execution) -> Result<Self> {
        if let Execution::Parallel { workers: Some(0) } = execution {
            return Err(Error::param("worker count must be positive"));
        }
        #[cfg(feature = "parallel")]
        let pool = match execution {
            Execution::Parallel { workers: Some(n) } => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::param(format!("cannot start {n} workers: {e}")))?,
            ),
            _ => None,
        };
        Ok(Engine {
            execution,
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    pub fn sequential() -> Self {
        Engine {
            execution: Execution::Sequential,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// Number of workers the transform will actually use.
    pub fn workers(&self) -> usize {
        match self.execution {
            Execution::Sequential => 1,
            #[cfg(feature = "parallel")]
            Execution::Parallel { .. } => match &self.pool {
                Some(pool) => pool.current_num_threads(),
                None => rayon::current_num_threads(),
            },
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel { .. } => 1,
        }
    }

    pub fn transform(
        &self,
        batch: &TimeSeriesBatch,
        kernels: &KernelSet,
        pooling: &PoolingConfig,
    ) -> Result<FeatureMatrix> {
        let mut out = self.transform_multi(batch, kernels, std::slice::from_ref(pooling))?;
        Ok(out.pop().expect("one pooling config yields one matrix"))
    }

    /// Convolves once and pools the same outputs under several configs,
    /// returning one matrix per config.
    pub fn transform_multi(
        &self,
        batch: &TimeSeriesBatch,
        kernels: &KernelSet,
        poolings: &[PoolingConfig],
    ) -> Result<Vec<FeatureMatrix>> {
        check_inputs(batch, kernels, poolings)?;
        let n = batch.n_examples();
        let k = kernels.count();
        let width: usize = poolings.iter().map(|p| p.features_per_kernel()).sum();
        let row_len = k * width;
        let mut combined = vec![0.0f32; n * row_len];

        if row_len > 0 {
            match self.execution {
                Execution::Sequential => fill_sequential(batch, kernels, poolings, width, &mut combined),
                Execution::Parallel { .. } => self.fill_parallel(batch, kernels, poolings, width, &mut combined),
            }
        }

        Ok(split_combined(combined, n, k, poolings))
    }

    #[cfg(feature = "parallel")]
    fn fill_parallel(
        &self,
        batch: &TimeSeriesBatch,
        kernels: &KernelSet,
        poolings: &[PoolingConfig],
        width: usize,
        combined: &mut [f32],
    ) {
        let row_len = kernels.count() * width;
        let scratch_len = max_output_len(batch.n_timesteps(), kernels);
        let mut work = || {
            combined
                .par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(i, row)| {
                    let series = batch.example(i);
                    row.par_chunks_mut(width).zip(kernels.kernels.par_iter()).for_each_init(
                        || Vec::with_capacity(scratch_len),
                        |scratch, (cell, kernel)| {
                            convolve_into(series, batch.n_timesteps(), kernel, scratch);
                            pool_cell(poolings, scratch, cell);
                        },
                    );
                });
        };
        match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn fill_parallel(
        &self,
        batch: &TimeSeriesBatch,
        kernels: &KernelSet,
        poolings: &[PoolingConfig],
        width: usize,
        combined: &mut [f32],
    ) {
        fill_sequential(batch, kernels, poolings, width, combined)
    }
}

fn fill_sequential(
    batch: &TimeSeriesBatch,
    kernels: &KernelSet,
    poolings: &[PoolingConfig],
    width: usize,
    combined: &mut [f32],
) {
    let row_len = kernels.count() * width;
    let mut scratch = Vec::with_capacity(max_output_len(batch.n_timesteps(), kernels));
    for (i, row) in combined.chunks_mut(row_len).enumerate() {
        let series = batch.example(i);
        for (cell, kernel) in row.chunks_mut(width).zip(kernels.iter()) {
            convolve_into(series, batch.n_timesteps(), kernel, &mut scratch);
            pool_cell(poolings, &scratch, cell);
        }
    }
}

#[inline]
fn pool_cell(poolings: &[PoolingConfig], z: &[f32], cell: &mut [f32]) {
    let mut offset = 0;
    for p in poolings {
        let w = p.features_per_kernel();
        p.pool_into(z, &mut cell[offset..offset + w]);
        offset += w;
    }
}

fn max_output_len(n_timesteps: usize, kernels: &KernelSet) -> usize {
    kernels
        .iter()
        .filter_map(|k| k.output_length(n_timesteps))
        .max()
        .unwrap_or(0)
}

fn split_combined(
    combined: Vec<f32>,
    n: usize,
    k: usize,
    poolings: &[PoolingConfig],
) -> Vec<FeatureMatrix> {
    if poolings.len() == 1 {
        let cols = k * poolings[0].features_per_kernel();
        return vec![FeatureMatrix {
            values: combined,
            n_rows: n,
            n_cols: cols,
        }];
    }
    let width: usize = poolings.iter().map(|p| p.features_per_kernel()).sum();
    let mut offset = 0;
    poolings
        .iter()
        .map(|p| {
            let w = p.features_per_kernel();
            let mut values = Vec::with_capacity(n * k * w);
            for cell in combined.chunks(width) {
                values.extend_from_slice(&cell[offset..offset + w]);
            }
            offset += w;
            FeatureMatrix {
                values,
                n_rows: n,
                n_cols: k * w,
            }
        })
        .collect()
}

fn check_inputs(batch: &TimeSeriesBatch, kernels: &KernelSet, poolings: &[PoolingConfig]) -> Result<()> {
    if poolings.is_empty() {
        return Err(Error::param("at least one pooling config is required"));
    }
    for p in poolings {
        p.validate()?;
    }
    if batch.n_channels() != kernels.num_channels {
        return Err(Error::param(format!(
            "batch has {} channels but kernels expect {}",
            batch.n_channels(),
            kernels.num_channels
        )));
    }
    for (index, kernel) in kernels.iter().enumerate() {
        check_kernel_fits(kernel, batch.n_channels(), batch.n_timesteps())
            .map_err(|e| Error::param(format!("kernel {index}: {e}")))?;
    }
    Ok(())
}

fn check_kernel_fits(kernel: &Kernel, n_channels: usize, n_timesteps: usize) -> Result<()> {
    if let Some(&c) = kernel.channel_indices.iter().find(|&&c| c >= n_channels) {
        return Err(Error::param(format!(
            "channel index {c} out of range for {n_channels} channels"
        )));
    }
    if kernel.weights.len() != kernel.channel_indices.len() * kernel.length {
        return Err(Error::param("weight count does not match channels x length"));
    }
    match kernel.output_length(n_timesteps) {
        Some(len) if len >= 1 => Ok(()),
        _ => Err(Error::param(format!(
            "receptive span {} exceeds padded length {}",
            kernel.span(),
            n_timesteps + 2 * kernel.padding
        ))),
    }
}

/// Convolves `kernel` over one example (`C x T` slice), writing
/// `out[i] = bias + sum_c sum_j w[c][j] * x_pad[c][i + j * dilation]`.
/// Padding is implicit: taps landing in the zero margin are skipped.
fn convolve_into(series: &[f32], n_timesteps: usize, kernel: &Kernel, out: &mut Vec<f32>) {
    let out_len = n_timesteps + 2 * kernel.padding - kernel.span();
    out.clear();
    out.resize(out_len, kernel.bias);
    let pad = kernel.padding as isize;
    let t = n_timesteps as isize;
    for (r, &c) in kernel.channel_indices.iter().enumerate() {
        let x = &series[c * n_timesteps..(c + 1) * n_timesteps];
        for (j, &w) in kernel.channel_weights(r).iter().enumerate() {
            let offset = (j * kernel.dilation) as isize - pad;
            let lo = (-offset).max(0);
            let hi = (out_len as isize).min(t - offset);
            if lo >= hi {
                continue;
            }
            let src = &x[(lo + offset) as usize..(hi + offset) as usize];
            for (o, &xv) in out[lo as usize..hi as usize].iter_mut().zip(src) {
                *o += w * xv;
            }
        }
    }
}

/// Convolution output of one kernel over one example (`C x T` slice).
pub fn apply_kernel(series: &[f32], n_timesteps: usize, kernel: &Kernel) -> Result<Vec<f32>> {
    if n_timesteps == 0 || !series.len().is_multiple_of(n_timesteps) {
        return Err(Error::param("series length is not a multiple of n_timesteps"));
    }
    check_kernel_fits(kernel, series.len() / n_timesteps, n_timesteps)?;
    let mut out = Vec::new();
    convolve_into(series, n_timesteps, kernel, &mut out);
    Ok(out)
}

/// Transforms a batch with the default execution strategy.
pub fn transform_batch(
    batch: &TimeSeriesBatch,
    kernels: &KernelSet,
    pooling: &PoolingConfig,
) -> Result<FeatureMatrix> {
    Engine::new(Execution::default())?.transform(batch, kernels, pooling)
}

/// Unoptimized transform used as a correctness oracle: materializes the
/// zero-padded series and evaluates every output element directly.
pub fn transform_reference(
    batch: &TimeSeriesBatch,
    kernels: &KernelSet,
    pooling: &PoolingConfig,
) -> Result<FeatureMatrix> {
    check_inputs(batch, kernels, std::slice::from_ref(pooling))?;
    let t = batch.n_timesteps();
    let width = pooling.features_per_kernel();
    let mut values = Vec::with_capacity(batch.n_examples() * kernels.count() * width);
    for i in 0..batch.n_examples() {
        for kernel in kernels.iter() {
            let pad = kernel.padding;
            let padded: Vec<Vec<f32>> = kernel
                .channel_indices
                .iter()
                .map(|&c| {
                    let mut p = vec![0.0f32; t + 2 * pad];
                    p[pad..pad + t].copy_from_slice(batch.channel(i, c));
                    p
                })
                .collect();
            let out_len = t + 2 * pad - kernel.span();
            let mut z = vec![0.0f32; out_len];
            for (o, zo) in z.iter_mut().enumerate() {
                let mut acc = kernel.bias;
                for (r, xp) in padded.iter().enumerate() {
                    for j in 0..kernel.length {
                        acc += kernel.weights[r * kernel.length + j] * xp[o + j * kernel.dilation];
                    }
                }
                *zo = acc;
            }
            let ppv = match pooling.mode {
                PoolingMode::Hard => pooling::ppv(&z)?,
                PoolingMode::Soft => pooling::soft_ppv(&z, pooling.lambda, pooling.shift)?,
            };
            values.push(ppv);
            if pooling.include_max {
                values.push(pooling::max_pool(&z)?);
            }
        }
    }
    FeatureMatrix::new(values, batch.n_examples(), kernels.count() * width)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(weights: Vec<f32>, dilation: usize, padding: usize) -> Kernel {
        Kernel {
            length: weights.len(),
            dilation,
            padding,
            bias: 0.0,
            channel_indices: vec![0],
            weights,
        }
    }

    // Direct definition with explicit padding, independent of convolve_into.
    fn naive(x: &[f32], w: &[f32], d: usize, b: f32, pad: usize) -> Vec<f32> {
        let mut xp = vec![0.0; pad];
        xp.extend_from_slice(x);
        xp.extend(std::iter::repeat_n(0.0, pad));
        let span = (w.len() - 1) * d;
        (0..xp.len() - span)
            .map(|i| b + w.iter().enumerate().map(|(j, wj)| wj * xp[i + j * d]).sum::<f32>())
            .collect()
    }

    #[test]
    fn apply_kernel_examples() {
        // Hand-built kernels below bypass the length {7,9,11} rule on purpose.
        let k = kernel(vec![1.0, 0.0, -1.0], 1, 0);
        let got = apply_kernel(&[1.0, 2.0, 3.0, 4.0], 4, &k).unwrap();
        assert_eq!(got, naive(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, -1.0], 1, 0.0, 0));
        assert_eq!(got, vec![-2.0, -2.0]);

        let k = kernel(vec![1.0, 0.0, -1.0], 2, 0);
        assert_eq!(apply_kernel(&[1.0, 2.0, 3.0, 4.0, 5.0], 5, &k).unwrap(), vec![-4.0]);

        let k = kernel(vec![1.0, 1.0, 1.0], 1, 1);
        let got = apply_kernel(&[1.0, 1.0, 1.0], 3, &k).unwrap();
        assert_eq!(got, naive(&[1.0; 3], &[1.0; 3], 1, 0.0, 1));
        assert_eq!(got, vec![2.0, 3.0, 2.0]);
    }

    #[test]
    fn apply_kernel_multichannel_and_bias() {
        let k = Kernel {
            length: 2,
            dilation: 1,
            padding: 0,
            bias: 0.5,
            channel_indices: vec![0, 2],
            weights: vec![1.0, -1.0, 2.0, 0.0],
        };
        // channels: [1,2,3], [9,9,9], [4,5,6]
        let series = [1.0, 2.0, 3.0, 9.0, 9.0, 9.0, 4.0, 5.0, 6.0];
        let got = apply_kernel(&series, 3, &k).unwrap();
        assert_eq!(got, vec![0.5 + (1.0 - 2.0) + 8.0, 0.5 + (2.0 - 3.0) + 10.0]);
    }

    #[test]
    fn apply_kernel_rejects_bad_shapes() {
        let mut k = kernel(vec![1.0, 0.0, -1.0], 3, 0);
        assert!(apply_kernel(&[1.0, 2.0, 3.0, 4.0], 4, &k).is_err());
        k.dilation = 1;
        k.channel_indices = vec![1];
        assert!(apply_kernel(&[1.0, 2.0, 3.0, 4.0], 4, &k).is_err());
    }

    #[test]
    fn same_padding_keeps_length() {
        let set = crate::generate_kernels(8, 50, 64, 2).unwrap();
        let series: Vec<f32> = (0..128).map(|i| (i as f32 * 0.37).sin()).collect();
        for k in set.iter().filter(|k| k.padding > 0) {
            assert_eq!(apply_kernel(&series, 64, k).unwrap().len(), 64);
        }
    }

    #[test]
    fn empty_batch_gives_zero_rows() {
        let set = crate::generate_kernels(1, 5, 32, 2).unwrap();
        let batch = TimeSeriesBatch::empty(2, 32);
        let f = transform_batch(&batch, &set, &PoolingConfig::hard()).unwrap();
        assert_eq!((f.n_rows(), f.n_cols()), (0, 10));
    }

    #[test]
    fn empty_kernel_set_gives_zero_columns() {
        let set = crate::generate_kernels(1, 0, 32, 1).unwrap();
        let batch = TimeSeriesBatch::new(vec![0.5; 64], 2, 1, 32).unwrap();
        let f = transform_batch(&batch, &set, &PoolingConfig::hard()).unwrap();
        assert_eq!((f.n_rows(), f.n_cols()), (2, 0));
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let set = crate::generate_kernels(1, 5, 32, 3).unwrap();
        let batch = TimeSeriesBatch::new(vec![0.0; 64], 1, 2, 32).unwrap();
        assert!(matches!(
            transform_batch(&batch, &set, &PoolingConfig::hard()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn batch_rejects_bad_data() {
        assert!(TimeSeriesBatch::new(vec![0.0; 5], 1, 2, 3).is_err());
        assert!(TimeSeriesBatch::new(vec![0.0, f32::NAN], 1, 1, 2).is_err());
    }

    #[test]
    fn hand_built_kernels_compose_elementwise() {
        let k1 = Kernel {
            length: 7,
            dilation: 2,
            padding: 6,
            bias: -0.1,
            channel_indices: vec![0],
            weights: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        };
        let k2 = Kernel {
            length: 7,
            dilation: 1,
            padding: 0,
            bias: 0.3,
            channel_indices: vec![0],
            weights: vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 0.0],
        };
        let set = KernelSet::from_kernels(vec![k1.clone(), k2.clone()], 1, 20, 0).unwrap();
        let series: Vec<f32> = (0..20).map(|i| ((i * 7) % 5) as f32 - 2.0).collect();
        let batch = TimeSeriesBatch::new(series.clone(), 1, 1, 20).unwrap();
        let f = transform_batch(&batch, &set, &PoolingConfig::hard()).unwrap();
        assert_eq!((f.n_rows(), f.n_cols()), (1, 4));
        for (k, kernel) in [k1, k2].iter().enumerate() {
            let z = naive(&series, &kernel.weights, kernel.dilation, kernel.bias, kernel.padding);
            assert_eq!(f.get(0, 2 * k), pooling::ppv(&z).unwrap());
            assert_eq!(f.get(0, 2 * k + 1), pooling::max_pool(&z).unwrap());
        }
    }

    #[test]
    fn multi_pooling_matches_individual_runs() {
        let set = crate::generate_kernels(4, 12, 50, 3).unwrap();
        let data: Vec<f32> = (0..3 * 3 * 50).map(|i| ((i as f32) * 0.61).cos()).collect();
        let batch = TimeSeriesBatch::new(data, 3, 3, 50).unwrap();
        let configs = [
            PoolingConfig::hard(),
            PoolingConfig::soft(4.0).with_max(false),
            PoolingConfig::soft(100.0),
        ];
        let engine = Engine::sequential();
        let multi = engine.transform_multi(&batch, &set, &configs).unwrap();
        for (cfg, m) in configs.iter().zip(&multi) {
            assert_eq!(&engine.transform(&batch, &set, cfg).unwrap(), m);
        }
        assert_eq!(multi[1].n_cols(), 12);
    }

    #[test]
    fn csv_layout() {
        let f = FeatureMatrix::new(vec![0.5, 1.25, 0.1, -3.0], 2, 2).unwrap();
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "example_id,f0,f1\n0,0.5,1.25\n1,0.1,-3\n");
    }
}
