use thiserror::Error;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// A library error, tagged with the stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: tadi::Error,
    },

    #[error("output: {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(tadi::Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    pub fn output(path: &std::path::Path, err: impl std::fmt::Display) -> CliError {
        CliError::Output {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } => EXIT_INPUT,
            CliError::Stage { source, .. } if source.is_input_error() => EXIT_INPUT,
            CliError::Stage { stage: "shifts", .. } => EXIT_INPUT,
            CliError::Stage { .. } => EXIT_NUMERICAL,
        }
    }
}
