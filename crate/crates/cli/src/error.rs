use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown family: {0}")]
    UnknownFamily(String),
    #[error("evaluation error: {0}")]
    Eval(#[from] probrenorm::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} residual(s) out of bounds")]
    Breach(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownFamily(_) => 1,
            CliError::Eval(_) | CliError::Io(_) => 2,
            CliError::Breach(_) => 3,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
