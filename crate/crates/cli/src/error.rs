use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Limit(qst_memory::Error),
    #[error("{0}")]
    Compute(qst_memory::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Limit(_) => 4,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<qst_memory::Error> for CliError {
    fn from(e: qst_memory::Error) -> Self {
        use qst_memory::Error as E;
        match e {
            e if e.is_resource_limit() => CliError::Limit(e),
            E::InvalidChain(_) | E::InvalidParameter(_) => CliError::Config(e.to_string()),
            e => CliError::Compute(e),
        }
    }
}
