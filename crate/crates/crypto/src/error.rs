use thiserror::Error;

pub type Result<T> = std::result::Result<T, CryptoError>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("group generation failed: {0}")]
    GroupGeneration(String),
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),
    /// Decryption failed: wrong key, tampered ciphertext or a forged message.
    #[error("authentication failure")]
    AuthenticationFailure,
    #[error("commitment signature does not verify")]
    CommitmentInvalid,
    #[error("delegation congruence check failed")]
    DelegationInvalid,
    #[error("malformed encoding: {0}")]
    Decode(String),
}
