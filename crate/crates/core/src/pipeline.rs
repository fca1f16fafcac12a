//! End-to-end regression workflow: normalize, transform, fit, evaluate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelgen::KernelSet;
use crate::pooling::PoolingConfig;
use crate::ridge::{self, AlphaScore, RidgeModel};
use crate::surface::normalize_per_channel;
use crate::transform::{Engine, FeatureMatrix, TimeSeriesBatch};

/// Row indices of a train/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded split stratified by label quantile: rows are sorted by label, cut
/// into as many contiguous strata as there are test rows, and one row per
/// stratum is drawn for the test set.
pub fn stratified_split(labels: &[f64], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::param(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let n = labels.len();
    let n_test = (n as f64 * (1.0 - train_fraction)).round() as usize;
    if n_test == 0 {
        return Err(Error::param(format!(
            "train fraction {train_fraction} leaves an empty test set for {n} examples"
        )));
    }
    if n - n_test < 2 {
        return Err(Error::param(format!(
            "train fraction {train_fraction} leaves fewer than 2 training examples"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]).then(a.cmp(&b)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; n];
    for s in 0..n_test {
        let lo = s * n / n_test;
        let hi = (s + 1) * n / n_test;
        is_test[order[rng.random_range(lo..hi)]] = true;
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_mse: f64,
    pub test_mse: f64,
    /// Test MSE of always predicting the training-label mean.
    pub baseline_mse: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub model: RidgeModel,
    pub alpha_scores: Vec<AlphaScore>,
    /// Predictions for every row of the feature matrix.
    pub predictions: Vec<f64>,
    pub metrics: Metrics,
}

/// Fits on the training rows and scores both partitions.
pub fn evaluate(features: &FeatureMatrix, labels: &[f64], split: &Split, alphas: &[f64]) -> Result<Evaluation> {
    if features.n_rows() != labels.len() {
        return Err(Error::param(format!(
            "{} feature rows but {} labels",
            features.n_rows(),
            labels.len()
        )));
    }
    let pick = |rows: &[usize], v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let train_labels = pick(&split.train, labels);
    let test_labels = pick(&split.test, labels);

    let fit = ridge::fit_cv(&features.select(&split.train), &train_labels, alphas)?;
    let predictions = ridge::predict(&fit.model, features)?;

    let train_mean = train_labels.iter().sum::<f64>() / train_labels.len() as f64;
    let metrics = Metrics {
        train_mse: ridge::mse(&pick(&split.train, &predictions), &train_labels)?,
        test_mse: ridge::mse(&pick(&split.test, &predictions), &test_labels)?,
        baseline_mse: ridge::mse(&vec![train_mean; test_labels.len()], &test_labels)?,
        alpha: fit.model.alpha,
    };
    Ok(Evaluation {
        model: fit.model,
        alpha_scores: fit.scores,
        predictions,
        metrics,
    })
}

/// Result of running the full pipeline under one pooling configuration.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub pooling: PoolingConfig,
    pub features: FeatureMatrix,
    pub evaluation: Evaluation,
}

/// Normalizes `raw`, transforms it once per pooling config (sharing the
/// convolutions), and evaluates a ridge model on each feature set.
pub fn run_pipeline(
    engine: &Engine,
    raw: &TimeSeriesBatch,
    labels: &[f64],
    kernels: &KernelSet,
    poolings: &[PoolingConfig],
    split: &Split,
    alphas: &[f64],
) -> Result<Vec<PipelineRun>> {
    if raw.n_examples() != labels.len() {
        return Err(Error::param(format!(
            "{} examples but {} labels",
            raw.n_examples(),
            labels.len()
        )));
    }
    let normalized = normalize_per_channel(raw);
    let matrices = engine.transform_multi(&normalized, kernels, poolings)?;
    poolings
        .iter()
        .zip(matrices)
        .map(|(pooling, features)| {
            let evaluation = evaluate(&features, labels, split, alphas)?;
            Ok(PipelineRun {
                pooling: *pooling,
                features,
                evaluation,
            })
        })
        .collect()
}
