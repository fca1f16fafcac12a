use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rocket_forge::bench::{self, BenchConfig};
use rocket_forge::pipeline::{run_pipeline, stratified_split, PipelineRun, Split};
use rocket_forge::ridge::{self, default_alphas};
use rocket_forge::surface::{generate_dataset, load_labels, load_rkds, save_labels, save_rkds, SynthConfig};
use rocket_forge::transform::{Engine, Execution, TimeSeriesBatch};
use rocket_forge::{generate_kernels, load_kernels, save_kernels, KernelSet, PoolingConfig};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{BenchArgs, Cli, Command, DataArgs, GenKernelsArgs, LambdaSweepArgs, PipelineArgs, PoolingArg, SynthArgs};

/// Failure classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<rocket_forge::Error> for CliError {
    fn from(e: rocket_forge::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let execution = Execution::Parallel { workers: cli.workers };
    let engine = Engine::new(execution).map_err(usage)?;
    match cli.command {
        Command::GenKernels(args) => gen_kernels(args),
        Command::Synth(args) => synth(args),
        Command::Pipeline(args) => pipeline(&engine, args),
        Command::LambdaSweep(args) => lambda_sweep(&engine, args),
        Command::Bench(args) => run_bench(cli.workers, args),
    }
}

fn gen_kernels(args: GenKernelsArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("gen-kernels");
    let kernels = generate_kernels(args.seed, args.num_kernels, args.input_length, args.channels).map_err(usage)?;
    save_kernels(&kernels, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} kernels (seed {}) to {}", kernels.count(), args.seed, args.out.display());

    manifest.seed("kernel_seed", args.seed);
    manifest.config = json!({
        "num_kernels": args.num_kernels,
        "input_length": args.input_length,
        "channels": args.channels,
    });
    manifest.outputs.push(args.out.clone());
    manifest.finish(&args.out.with_extension("manifest.json"))?;
    Ok(())
}

fn load_synth_config(path: Option<&Path>) -> Result<SynthConfig, CliError> {
    match path {
        None => Ok(SynthConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing synthetic config {}", path.display()))
                .map_err(usage)
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("synth");
    let mut config = load_synth_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n_samples {
        config.n_samples = n;
    }
    if let Some(c) = args.channels {
        config.n_channels = c;
    }
    if let Some(t) = args.timesteps {
        config.n_timesteps = t;
    }
    config.validate().map_err(usage)?;
    let dataset = generate_dataset(&config)?;

    let rkds = with_suffix(&args.out_prefix, ".rkds");
    let labels = with_suffix(&args.out_prefix, ".labels.csv");
    save_rkds(&dataset.batch, &rkds).with_context(|| format!("writing {}", rkds.display()))?;
    save_labels(&dataset.labels, &labels).with_context(|| format!("writing {}", labels.display()))?;

    manifest.seed("synth_seed", config.seed);
    manifest.config = serde_json::to_value(&config).context("serializing config")?;
    manifest.inputs.extend(args.config);
    manifest.outputs.extend([rkds, labels]);
    manifest.finish(&with_suffix(&args.out_prefix, ".manifest.json"))?;
    Ok(())
}

/// Inputs shared by `pipeline` and `lambda-sweep`, resolved from flags.
struct Prepared {
    raw: TimeSeriesBatch,
    labels: Vec<f64>,
    kernels: KernelSet,
    split: Split,
    alphas: Vec<f64>,
    source: serde_json::Value,
}

fn prepare(args: &DataArgs, manifest: &mut RunManifest) -> Result<Prepared, CliError> {
    let alphas = args.alphas.clone().unwrap_or_else(default_alphas);
    if alphas.is_empty() || alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(usage(anyhow::anyhow!("--alphas must be positive, finite values")));
    }
    if !(args.train_test_split > 0.0 && args.train_test_split < 1.0) {
        return Err(usage(anyhow::anyhow!(
            "--train-test-split must lie strictly between 0 and 1, got {}",
            args.train_test_split
        )));
    }

    let (raw, labels, source) = match (&args.data, &args.labels) {
        (Some(data), Some(labels)) => {
            manifest.inputs.extend([data.clone(), labels.clone()]);
            let raw = load_rkds(data).with_context(|| format!("reading {}", data.display()))?;
            let source = json!({ "data": data, "labels": labels });
            let labels = load_labels(labels).with_context(|| format!("reading {}", labels.display()))?;
            (raw, labels, source)
        }
        _ => {
            let config = load_synth_config(args.synth_config.as_deref())?;
            config.validate().map_err(usage)?;
            manifest.inputs.extend(args.synth_config.clone());
            manifest.seed("synth_seed", config.seed);
            let dataset = generate_dataset(&config)?;
            let source = json!({ "synthetic": config });
            (dataset.batch, dataset.labels, source)
        }
    };
    if raw.n_examples() != labels.len() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} series but {} labels",
            raw.n_examples(),
            labels.len()
        )));
    }

    let kernels = match &args.kernels {
        Some(path) => {
            manifest.inputs.push(path.clone());
            load_kernels(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            manifest.seed("kernel_seed", args.kernel_seed);
            generate_kernels(args.kernel_seed, args.num_kernels, raw.n_timesteps(), raw.n_channels())
                .map_err(usage)?
        }
    };

    let split = stratified_split(&labels, args.train_test_split, args.seed).map_err(usage)?;
    manifest.seed("split_seed", args.seed);
    Ok(Prepared {
        raw,
        labels,
        kernels,
        split,
        alphas,
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn pipeline(engine: &Engine, args: PipelineArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("pipeline");
    let pooling = match args.pooling {
        PoolingArg::Hard => PoolingConfig::hard(),
        PoolingArg::Soft => PoolingConfig::soft(args.lambda).with_shift(args.shift),
    }
    .with_max(!args.no_max);
    pooling.validate().map_err(usage)?;

    let data = prepare(&args.data, &mut manifest)?;
    let out_dir = &args.data.out_dir;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut runs = run_pipeline(
        engine,
        &data.raw,
        &data.labels,
        &data.kernels,
        &[pooling],
        &data.split,
        &data.alphas,
    )?;
    let PipelineRun {
        features, evaluation, ..
    } = runs.pop().expect("one pooling config yields one run");

    let features_path = out_dir.join("features.csv");
    let mut out = create(&features_path)?;
    features.write_csv(&mut out)?;
    out.flush().context("writing features")?;

    let model_path = out_dir.join("model.json");
    ridge::save_model(&evaluation.model, &model_path)?;

    let predictions_path = out_dir.join("predictions.csv");
    let mut out = create(&predictions_path)?;
    let mut is_test = vec![false; data.labels.len()];
    for &i in &data.split.test {
        is_test[i] = true;
    }
    writeln!(out, "example_id,split,ra,predicted_ra").context("writing predictions")?;
    for (i, (ra, pred)) in data.labels.iter().zip(&evaluation.predictions).enumerate() {
        let part = if is_test[i] { "test" } else { "train" };
        writeln!(out, "{i},{part},{ra},{pred}").context("writing predictions")?;
    }
    out.flush().context("writing predictions")?;

    let metrics_path = out_dir.join("metrics.json");
    let m = evaluation.metrics;
    let metrics = json!({
        "train_mse": m.train_mse,
        "test_mse": m.test_mse,
        "baseline_mse": m.baseline_mse,
        "alpha": m.alpha,
        "alpha_scores": evaluation.alpha_scores,
        "n_train": data.split.train.len(),
        "n_test": data.split.test.len(),
        "n_features": features.n_cols(),
        "workers": engine.workers(),
    });
    fs::write(&metrics_path, serde_json::to_string_pretty(&metrics).context("serializing metrics")? + "\n")
        .with_context(|| format!("writing {}", metrics_path.display()))?;

    println!(
        "alpha={} train_mse={:.6} test_mse={:.6} baseline_mse={:.6}",
        m.alpha, m.train_mse, m.test_mse, m.baseline_mse
    );

    manifest.config = json!({
        "pooling": pooling,
        "source": data.source,
        "num_kernels": data.kernels.count(),
        "kernels": args.data.kernels,
        "train_test_split": args.data.train_test_split,
        "alphas": data.alphas,
        "workers": engine.workers(),
    });
    manifest
        .outputs
        .extend([features_path, model_path, predictions_path, metrics_path]);
    manifest.finish(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn lambda_sweep(engine: &Engine, args: LambdaSweepArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("lambda-sweep");
    let mut poolings: Vec<PoolingConfig> = args
        .lambdas
        .iter()
        .map(|&l| PoolingConfig::soft(l).with_shift(args.shift))
        .collect();
    poolings.push(PoolingConfig::hard());
    for p in &poolings {
        p.validate().map_err(usage)?;
    }

    let data = prepare(&args.data, &mut manifest)?;
    let out_dir = &args.data.out_dir;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let runs = run_pipeline(
        engine,
        &data.raw,
        &data.labels,
        &data.kernels,
        &poolings,
        &data.split,
        &data.alphas,
    )?;

    let csv_path = out_dir.join("lambda_sweep.csv");
    let mut out = create(&csv_path)?;
    writeln!(out, "lambda,test_mse").context("writing sweep")?;
    for (lambda, run) in args.lambdas.iter().zip(&runs) {
        writeln!(out, "{lambda},{}", run.evaluation.metrics.test_mse).context("writing sweep")?;
    }
    let hard = runs.last().expect("hard reference run");
    writeln!(out, "hard,{}", hard.evaluation.metrics.test_mse).context("writing sweep")?;
    out.flush().context("writing sweep")?;

    manifest.config = json!({
        "lambdas": args.lambdas,
        "shift": args.shift,
        "source": data.source,
        "num_kernels": data.kernels.count(),
        "kernels": args.data.kernels,
        "train_test_split": args.data.train_test_split,
        "alphas": data.alphas,
        "workers": engine.workers(),
    });
    manifest.outputs.push(csv_path);
    manifest.finish(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn run_bench(workers: Option<usize>, args: BenchArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("bench");
    let pooling = match args.pooling {
        PoolingArg::Hard => PoolingConfig::hard(),
        PoolingArg::Soft => PoolingConfig::soft(args.lambda),
    };
    let config = BenchConfig {
        batch_sizes: args.batch_sizes,
        repeats: args.repeats,
        warmup_iters: args.warmup,
        num_kernels: args.num_kernels,
        n_channels: args.channels,
        n_timesteps: args.timesteps,
        pooling,
        seed: args.seed,
        workers,
        memory_budget_bytes: args.memory_budget_mb.saturating_mul(1 << 20),
    };
    config.validate().map_err(usage)?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let report = bench::run_benchmark(&config)?;
    let csv_path = args.out_dir.join("bench.csv");
    bench::export_report(&report, &csv_path)?;

    for row in &report.rows {
        println!(
            "batch_size={} median_wall_seconds={:.6} throughput_tps={:.3}",
            row.batch_size, row.median_wall_seconds, row.throughput_tps
        );
    }

    manifest.seed("bench_seed", config.seed);
    manifest.config = serde_json::to_value(&config).context("serializing config")?;
    manifest.outputs.extend([bench::sidecar_path(&csv_path), csv_path]);
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    Ok(())
}
