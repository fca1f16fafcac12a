//! Surface metrology and the synthetic measurement data used in place of
//! real laser readings.

pub mod dataset;
pub mod metrology;
pub mod synth;

pub use dataset::{load_labels, load_rkds, save_labels, save_rkds};
pub use metrology::{compute_ra, highpass_filter, normalize_per_channel, SurfaceProfile};
pub use synth::{generate_dataset, SynthConfig, SyntheticDataset};
