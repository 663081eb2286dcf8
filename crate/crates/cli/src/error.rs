use actiseg_core::evaluation::EvalError;
use actiseg_core::features::FeatureError;
use actiseg_core::ingest::IngestError;
use actiseg_core::models::ModelError;
use actiseg_core::segmentation::SchemeError;
use actiseg_core::synth::SynthError;
use thiserror::Error;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub(crate) fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::MissingColumn { .. } => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::config(e)
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::InvalidScheme { .. }
            | FeatureError::UnknownFeature(_)
            | FeatureError::DuplicateFeature(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParam(_) | ModelError::UnknownPreset(_) | ModelError::NotTreeModel(_) => {
                CliError::config(e)
            }
            ModelError::Dimension { .. } | ModelError::LabelCount(..) => CliError::Internal(e.to_string()),
            _ => CliError::data(e),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidK(_) | EvalError::Empty(_) => CliError::config(e),
            EvalError::PlanMismatch { .. } | EvalError::LengthMismatch(..) => {
                CliError::Internal(e.to_string())
            }
            EvalError::Model(m) => m.into(),
            EvalError::Feature(f) => f.into(),
            _ => CliError::data(e),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Ingest(i) => CliError::Internal(i.to_string()),
            _ => CliError::config(e),
        }
    }
}
