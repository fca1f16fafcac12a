//! Batch-size throughput sweeps for the transform.
//!
//! Experiments (one per batch size) run back to back in a seeded random
//! order. Each builds its input up front, runs `warmup_iters` untimed
//! transforms, then times `repeats` transforms. Only the transform call sits
//! inside the timed region.

use std::fs::File;
use std::hint::black_box;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelgen::generate_kernels;
use crate::pooling::PoolingConfig;
use crate::transform::{Engine, Execution, TimeSeriesBatch};

pub const REPORT_CSV_HEADER: &str = "batch_size,repeat,wall_seconds,median_wall_seconds,throughput_tps";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub batch_sizes: Vec<usize>,
    pub repeats: usize,
    pub warmup_iters: usize,
    pub num_kernels: usize,
    pub n_channels: usize,
    pub n_timesteps: usize,
    pub pooling: PoolingConfig,
    pub seed: u64,
    /// Engine workers; `None` uses every available core.
    pub workers: Option<usize>,
    /// Refuse any batch size whose estimated footprint exceeds this.
    pub memory_budget_bytes: u64,
}

impl Default for BenchConfig {
    /// Desk-scale sweep: 2,000-step series, batch sizes 1 to 64.
    fn default() -> Self {
        BenchConfig {
            batch_sizes: vec![1, 2, 4, 8, 16, 32, 64],
            repeats: 3,
            warmup_iters: 2,
            num_kernels: 10_000,
            n_channels: 20,
            n_timesteps: 2_000,
            pooling: PoolingConfig::hard(),
            seed: 0,
            workers: None,
            memory_budget_bytes: 4 << 30,
        }
    }
}

impl BenchConfig {
    /// Full-length series and a log-spaced sweep up to 1,000 examples.
    pub fn full_scale() -> Self {
        BenchConfig {
            batch_sizes: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000],
            n_timesteps: 50_000,
            memory_budget_bytes: 16 << 30,
            ..BenchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_sizes.contains(&0) {
            return Err(Error::param("batch sizes must be positive"));
        }
        if self.repeats == 0 {
            return Err(Error::param("repeats must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers must be positive"));
        }
        self.pooling.validate()
    }

    /// Sorted, deduplicated batch sizes.
    pub fn normalized_batch_sizes(&self) -> Vec<usize> {
        let mut sizes = self.batch_sizes.clone();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    /// Estimated peak bytes for one experiment: input, features, per-worker
    /// scratch, and the kernel bank.
    pub fn estimate_bytes(&self, batch_size: usize, workers: usize) -> u64 {
        let f32_bytes = 4u64;
        let input = (batch_size * self.n_channels * self.n_timesteps) as u64 * f32_bytes;
        let output =
            (batch_size * self.num_kernels * self.pooling.features_per_kernel()) as u64 * f32_bytes;
        // padded output length never exceeds twice the series
        let scratch = (workers * 2 * self.n_timesteps) as u64 * f32_bytes;
        let kernels = self.num_kernels as u64 * (self.n_channels as u64 * 11 * f32_bytes + 96);
        input + output + scratch + kernels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub batch_size: usize,
    pub wall_seconds: Vec<f64>,
    pub median_wall_seconds: f64,
    pub throughput_tps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub worker_count: usize,
    /// Seconds since the Unix epoch at the start of the run.
    pub timestamp_unix: f64,
    pub timer: String,
    /// Smallest nonzero step observed between consecutive timer reads.
    pub timer_resolution_seconds: f64,
    /// Batch sizes in the order they were executed.
    pub execution_order: Vec<usize>,
    pub parallel_feature: bool,
    pub config: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Ascending by batch size.
    pub rows: Vec<BenchRow>,
    pub metadata: BenchMetadata,
}

/// Hooks called immediately around every timed transform.
pub trait TimingProbe {
    fn enter(&mut self, _batch_size: usize) {}
    fn exit(&mut self, _batch_size: usize) {}
}

/// Probe that does nothing.
pub struct NoProbe;

impl TimingProbe for NoProbe {}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    run_benchmark_with_probe(config, &mut NoProbe)
}

pub fn run_benchmark_with_probe(config: &BenchConfig, probe: &mut dyn TimingProbe) -> Result<BenchReport> {
    config.validate()?;
    let engine = Engine::new(Execution::Parallel {
        workers: config.workers,
    })?;
    let workers = engine.workers();
    let sizes = config.normalized_batch_sizes();

    for &batch_size in &sizes {
        let required = config.estimate_bytes(batch_size, workers);
        if required > config.memory_budget_bytes {
            return Err(Error::Sizing {
                batch_size,
                required_bytes: required,
                budget_bytes: config.memory_budget_bytes,
            });
        }
    }

    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let kernels = generate_kernels(config.seed, config.num_kernels, config.n_timesteps, config.n_channels)?;

    let mut order = sizes.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0bde));

    let mut rows = Vec::with_capacity(order.len());
    for &batch_size in &order {
        let batch = random_batch(config, batch_size);
        for _ in 0..config.warmup_iters {
            black_box(engine.transform(&batch, &kernels, &config.pooling)?);
        }
        let mut wall_seconds = Vec::with_capacity(config.repeats);
        for _ in 0..config.repeats {
            probe.enter(batch_size);
            let start = Instant::now();
            let features = engine.transform(black_box(&batch), &kernels, &config.pooling);
            let elapsed = start.elapsed();
            probe.exit(batch_size);
            black_box(features?);
            wall_seconds.push(elapsed.as_secs_f64());
        }
        let median_wall_seconds = median(&wall_seconds);
        rows.push(BenchRow {
            batch_size,
            wall_seconds,
            median_wall_seconds,
            throughput_tps: batch_size as f64 / median_wall_seconds.max(f64::MIN_POSITIVE),
        });
    }
    rows.sort_by_key(|r| r.batch_size);

    Ok(BenchReport {
        rows,
        metadata: BenchMetadata {
            worker_count: workers,
            timestamp_unix,
            timer: "std::time::Instant (monotonic)".into(),
            timer_resolution_seconds: timer_resolution(),
            execution_order: order,
            parallel_feature: cfg!(feature = "parallel"),
            config: config.clone(),
        },
    })
}

fn random_batch(config: &BenchConfig, batch_size: usize) -> TimeSeriesBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(batch_size as u64));
    let len = batch_size * config.n_channels * config.n_timesteps;
    let data: Vec<f32> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    TimeSeriesBatch::new(data, batch_size, config.n_channels, config.n_timesteps)
        .expect("shape matches by construction")
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn timer_resolution() -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min((b - a).as_secs_f64());
    }
    best
}

/// Writes one CSV line per (batch size, repeat).
pub fn write_report_csv(report: &BenchReport, mut out: impl Write) -> Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for row in &report.rows {
        for (repeat, wall) in row.wall_seconds.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.batch_size, repeat, wall, row.median_wall_seconds, row.throughput_tps
            )?;
        }
    }
    Ok(())
}

/// Path of the JSON metadata sidecar for a report CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the report CSV to `path` and its metadata to the `.json` sidecar.
pub fn export_report(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut csv = BufWriter::new(File::create(path)?);
    write_report_csv(report, &mut csv)?;
    csv.flush()?;

    let mut json = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut json, &report.metadata).map_err(|e| Error::Format(e.to_string()))?;
    json.write_all(b"\n")?;
    json.flush()?;
    Ok(())
}

/// One parsed line of a report CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportLine {
    pub batch_size: usize,
    pub repeat: usize,
    pub wall_seconds: f64,
    pub median_wall_seconds: f64,
    pub throughput_tps: f64,
}

pub fn parse_report_csv(input: impl BufRead) -> Result<Vec<ReportLine>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(REPORT_CSV_HEADER) {
        return Err(Error::Format("unexpected benchmark CSV header".into()));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!("benchmark row {row}: expected 5 fields")));
        }
        let bad = |_| Error::Format(format!("benchmark row {row}: unparsable field"));
        out.push(ReportLine {
            batch_size: fields[0].parse().map_err(|_| Error::Format(format!("benchmark row {row}: bad batch_size")))?,
            repeat: fields[1].parse().map_err(|_| Error::Format(format!("benchmark row {row}: bad repeat")))?,
            wall_seconds: fields[2].parse().map_err(bad)?,
            median_wall_seconds: fields[3].parse().map_err(bad)?,
            throughput_tps: fields[4].parse().map_err(bad)?,
        });
    }
    Ok(out)
}
