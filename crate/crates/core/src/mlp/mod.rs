//! Feedforward torque predictor: the network, its trainer, fit metrics and
//! the model file format.

mod dataset;
mod metrics;
mod model_file;
mod network;
mod normalize;
mod train;

use std::path::Path;

use thiserror::Error;

pub use dataset::{Dataset, Split, SplitFractions, DATASET_HEADER};
pub use metrics::{evaluate, evaluate_predictions, pearson, EvalReport};
pub use model_file::{
    from_model_str, load_model, save_model, to_model_string, MAX_LAYERS, MAX_LAYER_WIDTH,
    MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{Gradients, Layer, Network, NetworkSpec};
pub use normalize::{Normalizer, NORMALIZED_MARGIN};
pub use train::{train, EpochStats, StopReason, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dataset or split is empty")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergedTraining { epoch: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MlpError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
