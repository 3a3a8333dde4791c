//! Error taxonomy mapped to process exit codes.

use csa_core::benchmark::BenchmarkError;
use csa_core::bounds::BoundsError;
use csa_core::dist::DistError;
use csa_core::estimate::FitError;
use csa_core::functionals::FunctionalError;
use csa_core::model::ModelError;
use csa_core::synth::SynthError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 1: configuration (flags, JSON schema, validation).
    #[error("config error: {0}")]
    Config(String),
    /// Exit code 2: input data (missing files, malformed CSV, bad columns).
    #[error("data error: {0}")]
    Data(String),
    /// Exit code 3: numeric failure during computation.
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FunctionalError> for CliError {
    fn from(e: FunctionalError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidNoise(_) | SynthError::InvalidQuery(_) | SynthError::UnknownNode(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::QueryShape(msg) => CliError::Config(msg),
            BoundsError::Model(m) => m.into(),
            BoundsError::Estimation(msg) => CliError::Data(msg),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::InvalidConfig(msg) => CliError::Config(msg),
            BenchmarkError::Synth(s) => s.into(),
            BenchmarkError::Fit(f) => f.into(),
            BenchmarkError::Bounds(b) => b.into(),
            BenchmarkError::Model(m) => m.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
