//! Random convolutional kernel transform for time series extrinsic regression.
//!
//! The crate is organised around the three stages of the model:
//!
//! * [`kernelgen`] draws a bank of random dilated 1D kernels.
//! * [`transform`] convolves every example with every kernel and pools each
//!   output with [`pooling`] (hard or soft proportion of positive values, plus
//!   max), giving two features per kernel.
//! * [`ridge`] fits a closed-form ridge regressor over those features.
//!
//! [`surface`] supplies roughness metrology (Gaussian profile filter, Ra), the
//! per-channel normalization, and a synthetic laser-reflection dataset.
//! [`bench`] runs batch-size throughput sweeps and [`pipeline`] wires the
//! stages together for end-to-end experiments.
//!
//! With the default `parallel` feature the transform runs on rayon; without
//! it every entry point falls back to the sequential path.

pub mod bench;
pub mod error;
pub mod kernelgen;
pub mod pipeline;
pub mod pooling;
pub mod ridge;
pub mod surface;
pub mod transform;

pub use error::{Error, Result};
pub use kernelgen::{generate_kernels, load_kernels, save_kernels, Kernel, KernelSet};
pub use pooling::{PoolingConfig, PoolingMode};
pub use ridge::RidgeModel;
pub use transform::{
    transform_batch, transform_reference, Execution, FeatureMatrix, TimeSeriesBatch,
};
