use thiserror::Error;

/// Process exit codes. Acceptance failures are 1; infrastructure errors are 2 and up.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const CONTRACT: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] transwalk::error::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use transwalk::error::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                E::Parse(_) | E::UnassignedLetter(_) | E::Mismatch(_) => exit::CONFIG,
                E::Budget { .. } => exit::BUDGET,
                _ => exit::CONTRACT,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
