//! End-to-end experiments: early-stopped training over seeded splits,
//! embedding analyses, the MLP probe and the connectivity sweeps.

mod config;
pub mod connectivity;
pub mod embeddings;
pub mod probe;
pub mod train;

pub use config::{ExperimentConfig, GridSpec, Pooling, Task};
pub use connectivity::{
    path_suite, resistance_suite, run_connectivity_suite, ConnectivityConfig, ConnectivityReport, ResistanceSuite,
};
pub use embeddings::{embedding_similarity, track_embedding_drift};
pub use probe::{run_mlp_probe, ProbeConfig, ProbeResult};
pub use train::{load_task_data, run_grid, run_training, run_training_on, splits_for, RunResult, TaskData};

use crate::augment::AugmentError;
use crate::centrality::CentralityError;
use crate::datasets::DatasetError;
use crate::gnn::ModelError;
use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("graph {graph}: {source}")]
    Augment { graph: usize, source: AugmentError },
    #[error(transparent)]
    Centrality(#[from] CentralityError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("dataset has no input node features")]
    Featureless,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Mean and 95% half-width `1.96 · s / √n`, with `s` the sample standard
/// deviation (zero for a single value).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

/// SplitMix64 finalizer; derives independent stream seeds.
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
