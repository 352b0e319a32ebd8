use sic_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Solver { .. } | CoreError::NoConvergence(_) => 3,
                CoreError::InfeasibleData(_) => 4,
                CoreError::Io(_) => 1,
                _ => 2,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let solver = CliError::Core(CoreError::Solver {
            context: String::new(),
            reason: "stalled".into(),
        });
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::Parse("x".into())).exit_code(), 2);
        assert_eq!(solver.exit_code(), 3);
        assert_eq!(CliError::Core(CoreError::NoConvergence("mle")).exit_code(), 3);
        assert_eq!(CliError::Core(CoreError::InfeasibleData("x".into())).exit_code(), 4);
    }
}
