//! Experiment orchestration: evaluation sets, training ensembles, accuracy
//! tables, noise sweeps, boundary maps, ablations, and report emission.

use thiserror::Error;

pub mod config;
pub mod emit;
pub mod ensemble;
pub mod evalsets;
pub mod experiments;
pub mod stats;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] dynamics::dataset::DatasetError),
    #[error(transparent)]
    Zoo(#[from] dynamics::zoo::ZooError),
    #[error(transparent)]
    Ode(#[from] dynamics::ode::OdeError),
    #[error(transparent)]
    Raster(#[from] dynamics::raster::RasterError),
    #[error(transparent)]
    Train(#[from] nnet::train::TrainError),
    #[error(transparent)]
    Checkpoint(#[from] nnet::checkpoint::CheckpointError),
    #[error(transparent)]
    Shape(#[from] nnet::ShapeMismatch),
    #[error(transparent)]
    Lyapunov(#[from] baselines::lyapunov::LyapunovError),
    #[error(transparent)]
    Fit(#[from] baselines::FitError),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl HarnessError {
    /// Process exit code: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Zoo(_) => 2,
            HarnessError::Io(_)
            | HarnessError::Json(_)
            | HarnessError::Csv(_)
            | HarnessError::Dataset(_)
            | HarnessError::Checkpoint(_)
            | HarnessError::Shape(_) => 3,
            HarnessError::Ode(_)
            | HarnessError::Raster(_)
            | HarnessError::Train(_)
            | HarnessError::Lyapunov(_)
            | HarnessError::Fit(_)
            | HarnessError::Numeric(_) => 4,
        }
    }
}
