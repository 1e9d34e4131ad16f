use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("topology parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("placement infeasible: {0}")]
    PlacementInfeasible(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Crypto(#[from] harpocrates_crypto::CryptoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Parse { .. } | SimError::Io(_) => 1,
            SimError::PlacementInfeasible(_) => 2,
            SimError::Invariant(_) | SimError::Crypto(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
