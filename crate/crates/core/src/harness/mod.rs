//! Scenario engine: trajectory, plant, predictor, filter and estimator wired
//! together, plus calibration, statistics and file output.

mod config;
mod io;
mod run;
mod summary;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::impact::ImpactError;
use crate::legsim::{sample_workspace, LegSimError};
use crate::mlp::{train, Dataset, MlpError, Network, SplitFractions, TrainConfig, TrainReport};
use crate::ukf::UkfError;

pub use config::{reference_contact, ScenarioConfig};
pub use io::{emit_run, emit_summary, record_events, trace_from_csv, trace_to_csv, EmittedFiles, TRACE_HEADER};
pub use run::{
    calibrate_threshold, calibration_seeds, resolve_threshold, run_scenario, run_seeds, RunRecord, TickRow,
    TraceRow,
};
pub use summary::{report_text, summarize, Range, SummaryStats};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    LegSim(#[from] LegSimError),
    #[error(transparent)]
    Model(#[from] MlpError),
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error("filter failed at tick {tick}: {source}")]
    Filter { tick: usize, source: UkfError },
    #[error("{file} line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<UkfError> for HarnessError {
    fn from(e: UkfError) -> Self {
        Self::Filter { tick: 0, source: e }
    }
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Short stable identifier for error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::LegSim(_) => "legsim",
            Self::Model(_) => "model",
            Self::Impact(_) => "impact",
            Self::Filter { .. } => "filter",
            Self::Parse { .. } => "parse",
            Self::Io { .. } => "io",
        }
    }
}

/// SplitMix64 over `base + stream`, for independent derived seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SPLIT_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const SHUFFLE_STREAM: u64 = 3;

/// The no-load training set for the configured leg and grid.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Dataset, HarnessError> {
    Ok(sample_workspace(&cfg.geometry, &cfg.dataset, derive_seed(cfg.seed, SPLIT_STREAM))?)
}

/// Re-applies the seeded split to a dataset loaded from CSV.
pub fn split_dataset(cfg: &ScenarioConfig, data: &mut Dataset) -> Result<(), HarnessError> {
    data.assign_splits(derive_seed(cfg.seed, SPLIT_STREAM), SplitFractions::default())?;
    Ok(())
}

/// Initialises and trains the configured network on `data`.
pub fn train_model(cfg: &ScenarioConfig, data: &Dataset) -> Result<(Network, TrainReport), HarnessError> {
    let mut net = Network::init(cfg.network.clone(), derive_seed(cfg.seed, INIT_STREAM))?;
    let tc = TrainConfig {
        seed: derive_seed(cfg.seed ^ cfg.training.seed, SHUFFLE_STREAM),
        ..cfg.training.clone()
    };
    let report = train(&mut net, data, &tc)?;
    net.check_torque_layout()?;
    Ok((net, report))
}

/// Loads the network named by `model_path` and checks it maps 4 to 2.
pub fn load_predictor(cfg: &ScenarioConfig) -> Result<Network, HarnessError> {
    let path = cfg
        .model_path
        .as_ref()
        .ok_or_else(|| HarnessError::Config("model_path is not set".into()))?;
    if !path.exists() {
        return Err(HarnessError::Config(format!("model file {} does not exist", path.display())));
    }
    let net = crate::mlp::load_model(path)?;
    net.check_torque_layout()?;
    Ok(net)
}
