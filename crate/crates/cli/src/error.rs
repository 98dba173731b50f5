use std::fmt;

use qwalk_core::QwError;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration, unknown ids, unwritable outputs.
    Config(String),
    Run(QwError),
}

impl CliError {
    /// 2 config, 3 numerical failure, 4 contract violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(e) => match e {
                QwError::UnknownCoin { .. } | QwError::UnknownBackend { .. } | QwError::Format { .. } | QwError::Io(_) => 2,
                QwError::NotUnitary { .. }
                | QwError::NumericalFailure { .. }
                | QwError::Resolution(_)
                | QwError::FeatureExtraction(_)
                | QwError::DegenerateField => 3,
                QwError::InvalidDimension(_)
                | QwError::InvalidArgument(_)
                | QwError::DimensionMismatch { .. }
                | QwError::SingularPoint { .. }
                | QwError::RegularityViolation { .. }
                | QwError::AmbiguousBranch { .. }
                | QwError::IllPosedComparison { .. } => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(e @ QwError::RegularityViolation { .. }) => {
                write!(f, "{e} (run `qwalk diabolo` for the conical-point analysis)")
            }
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<QwError> for CliError {
    fn from(e: QwError) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}
