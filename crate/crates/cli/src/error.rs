use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "invalid configuration",
            CliError::Numerical(_) => "numerical error",
            CliError::Io(_) => "i/o error",
        }
    }

    /// Classifies a core error raised while computing `section`.
    pub fn from_core(section: &str, e: phasemod::Error) -> Self {
        use phasemod::Error as E;
        match e {
            E::InvalidParameter { field, reason } => CliError::Validation(format!("{section}.{field}: {reason}")),
            E::ZeroDetuning | E::ZeroModulationFreq | E::BadWeights { .. } | E::RegimeViolation { .. } => {
                CliError::Validation(format!("{section}: {e}"))
            }
            E::StabilityViolation { .. } => {
                CliError::Numerical(format!("{e}; increase integrator.steps_per_period"))
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}
