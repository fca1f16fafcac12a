//! Closed-form ridge regression over pooled features.
//!
//! Features are standardized per column, the intercept is left unpenalized
//! (it equals the label mean), and the penalty is chosen from a candidate
//! list by exact leave-one-out error. All linear algebra runs in `f64`. The
//! solver works on whichever Gram matrix is smaller: `XᵀX` (F x F) when
//! there are at least as many rows as features, `XXᵀ` (N x N) otherwise.
//!
//! For a linear smoother `ŷ = Hy` the held-out residual of row `i` is
//! `(y_i - ŷ_i) / (1 - H_ii)`, so the leave-one-out error of every
//! candidate comes from a single fit. Standardization statistics are taken
//! from the full training set, the same convention as the usual
//! cross-validated ridge estimators.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Fitted linear model in standardized feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub alpha: f64,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

/// Leave-one-out score of one candidate penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaScore {
    pub alpha: f64,
    pub loo_mse: f64,
}

#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub model: RidgeModel,
    pub scores: Vec<AlphaScore>,
}

/// Ten log-spaced penalties from 1e-3 to 1e3.
pub fn default_alphas() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

/// Fits on a feature matrix; returns only the selected model.
pub fn fit(features: &FeatureMatrix, labels: &[f64], alphas: &[f64]) -> Result<RidgeModel> {
    fit_cv(features, labels, alphas).map(|f| f.model)
}

/// Fits on a feature matrix and reports the leave-one-out score of every
/// candidate penalty.
pub fn fit_cv(features: &FeatureMatrix, labels: &[f64], alphas: &[f64]) -> Result<RidgeFit> {
    let x = DMatrix::from_row_iterator(
        features.n_rows(),
        features.n_cols(),
        features.values().iter().map(|&v| v as f64),
    );
    fit_dense(&x, labels, alphas)
}

struct Standardized {
    x: DMatrix<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    constant: Vec<bool>,
}

fn standardize(x: &DMatrix<f64>) -> Standardized {
    let n = x.nrows() as f64;
    let mut xs = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    let mut constant = Vec::with_capacity(x.ncols());
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        let mean = x.column(j).iter().sum::<f64>() / n;
        let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let is_constant = sd <= 1e-12 * mean.abs().max(1.0);
        let scale = if is_constant { 1.0 } else { sd };
        for v in col.iter_mut() {
            *v = if is_constant { 0.0 } else { (*v - mean) / scale };
        }
        means.push(mean);
        scales.push(scale);
        constant.push(is_constant);
    }
    Standardized {
        x: xs,
        means,
        scales,
        constant,
    }
}

/// Fits on a dense `f64` design matrix (rows are examples).
pub fn fit_dense(x: &DMatrix<f64>, labels: &[f64], alphas: &[f64]) -> Result<RidgeFit> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::param(format!("ridge needs at least 2 rows, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::param(format!(
            "{} labels for {} feature rows",
            labels.len(),
            n
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::param("labels contain non-finite values"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("features contain non-finite values"));
    }
    if alphas.is_empty() {
        return Err(Error::param("no candidate alphas"));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::param(format!("alpha {a} is not positive")));
    }

    let std = standardize(x);
    let y_mean = labels.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, labels.iter().map(|y| y - y_mean));

    let solver = Solver::new(&std.x);

    let mut scores = Vec::with_capacity(alphas.len());
    let mut best: Option<(usize, f64)> = None;
    for (idx, &alpha) in alphas.iter().enumerate() {
        let loo = solver.loo_mse(&std.x, &yc, alpha)?;
        scores.push(AlphaScore { alpha, loo_mse: loo });
        if best.is_none_or(|(_, b)| loo < b) {
            best = Some((idx, loo));
        }
    }
    let alpha = alphas[best.expect("alphas non-empty").0];
    let mut weights = solver.weights(&std.x, &yc, alpha)?;
    for (w, &c) in weights.iter_mut().zip(&std.constant) {
        if c {
            *w = 0.0;
        }
    }

    Ok(RidgeFit {
        model: RidgeModel {
            alpha,
            intercept: y_mean,
            weights,
            feature_means: std.means,
            feature_scales: std.scales,
        },
        scores,
    })
}

enum Solver {
    /// `XᵀX`, F x F.
    Primal(DMatrix<f64>),
    /// `XXᵀ` (N x N) together with its restriction `ZᵀXXᵀZ` to the
    /// complement of the constant vector, where `Z` has orthonormal columns.
    Dual {
        kernel: DMatrix<f64>,
        basis: DMatrix<f64>,
        projected: DMatrix<f64>,
    },
}

/// Orthonormal basis (N x N-1) of the vectors summing to zero: the trailing
/// columns of the Householder reflection taking `1` onto the first axis.
fn centered_basis(n: usize) -> DMatrix<f64> {
    let root_n = (n as f64).sqrt();
    let mut v = DVector::from_element(n, 1.0);
    v[0] += root_n;
    let scale = 2.0 / v.norm_squared();
    let q = DMatrix::identity(n, n) - (&v * v.transpose()) * scale;
    q.columns(1, n - 1).into_owned()
}

impl Solver {
    fn new(x: &DMatrix<f64>) -> Self {
        if x.ncols() <= x.nrows() {
            return Solver::Primal(x.tr_mul(x));
        }
        let kernel = x * x.transpose();
        let basis = centered_basis(x.nrows());
        let projected = basis.tr_mul(&(&kernel * &basis));
        Solver::Dual {
            kernel,
            basis,
            projected,
        }
    }

    fn regularized(gram: &DMatrix<f64>, alpha: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let mut a = gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += alpha;
        }
        a.cholesky()
            .ok_or_else(|| Error::param(format!("Gram matrix not positive definite at alpha {alpha}")))
    }

    fn weights(&self, x: &DMatrix<f64>, yc: &DVector<f64>, alpha: f64) -> Result<Vec<f64>> {
        let w = match self {
            Solver::Primal(g) => Self::regularized(g, alpha)?.solve(&x.tr_mul(yc)),
            Solver::Dual { kernel, .. } => x.tr_mul(&Self::regularized(kernel, alpha)?.solve(yc)),
        };
        Ok(w.iter().copied().collect())
    }

    fn loo_mse(&self, x: &DMatrix<f64>, yc: &DVector<f64>, alpha: f64) -> Result<f64> {
        let n = x.nrows();
        let inv_n = 1.0 / n as f64;
        let mut total = 0.0;
        match self {
            Solver::Primal(g) => {
                let chol = Self::regularized(g, alpha)?;
                let w = chol.solve(&x.tr_mul(yc));
                let residual = yc - x * &w;
                // columns of A⁻¹Xᵀ; H_ii = x_iᵀ A⁻¹ x_i
                let s = chol.solve(&x.transpose());
                for i in 0..n {
                    let h = inv_n + x.row(i).transpose().dot(&s.column(i));
                    total += loo_term(residual[i], 1.0 - h);
                }
            }
            Solver::Dual { basis, projected, .. } => {
                // I - H = α Z (ZᵀKZ + αI)⁻¹ Zᵀ
                let chol = Self::regularized(projected, alpha)?;
                let m = chol.inverse();
                let zm = basis * &m;
                let residual = &zm * basis.tr_mul(yc) * alpha;
                for i in 0..n {
                    let one_minus_h = alpha * zm.row(i).dot(&basis.row(i));
                    total += loo_term(residual[i], one_minus_h);
                }
            }
        }
        Ok(total / n as f64)
    }
}

fn loo_term(residual: f64, one_minus_h: f64) -> f64 {
    if one_minus_h.abs() < 1e-12 {
        f64::INFINITY
    } else {
        (residual / one_minus_h).powi(2)
    }
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_row(&self, row: impl Iterator<Item = f64>) -> f64 {
        let mut acc = self.intercept;
        for (j, v) in row.enumerate() {
            acc += self.weights[j] * (v - self.feature_means[j]) / self.feature_scales[j];
        }
        acc
    }

    fn check_cols(&self, cols: usize) -> Result<()> {
        if cols != self.n_features() {
            return Err(Error::param(format!(
                "model expects {} features, got {}",
                self.n_features(),
                cols
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.weights.len();
        if self.feature_means.len() != f || self.feature_scales.len() != f {
            return Err(Error::Format("model vectors differ in length".into()));
        }
        if self.feature_scales.iter().any(|s| s.is_nan() || *s <= 0.0) {
            return Err(Error::Format("feature scales must be positive".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::Format("alpha must be positive".into()));
        }
        Ok(())
    }
}

pub fn predict(model: &RidgeModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    model.check_cols(features.n_cols())?;
    Ok((0..features.n_rows())
        .map(|i| model.predict_row(features.row(i).iter().map(|&v| v as f64)))
        .collect())
}

pub fn predict_dense(model: &RidgeModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    model.check_cols(x.ncols())?;
    Ok(x.row_iter()
        .map(|row| model.predict_row(row.iter().copied()))
        .collect())
}

/// Mean squared error.
pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::param(format!(
            "length mismatch: {} predictions, {} targets",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::param("mse of empty vectors"));
    }
    let sum: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok(sum / predicted.len() as f64)
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: u32,
    #[serde(flatten)]
    model: &'a RidgeModel,
}

#[derive(Deserialize)]
struct ModelFileIn {
    format_version: u32,
    #[serde(flatten)]
    model: RidgeModel,
}

pub fn write_model(model: &RidgeModel, mut out: impl Write) -> Result<()> {
    let file = ModelFileOut {
        format_version: MODEL_FORMAT_VERSION,
        model,
    };
    serde_json::to_writer(&mut out, &file).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn save_model(model: &RidgeModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RidgeModel> {
    let file: ModelFileIn = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| Error::Format(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format_version {}",
            file.format_version
        )));
    }
    file.model.validate()?;
    Ok(file.model)
}
