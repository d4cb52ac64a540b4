use thiserror::Error;

/// Errors produced by the numerical kernels and the solver built on them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix shapes are incompatible with the requested operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input values violate a precondition (non-finite entries, bad ranges,
    /// non-orthonormal columns, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A matrix required to be Hermitian positive definite is not, within
    /// the numerical threshold. Carries the offending minimum eigenvalue.
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    /// Scenario configuration is inconsistent; all violations are listed.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// Zero-forcing intra-cell precoding needs an invertible effective channel.
    #[error("ZF requires invertible effective channel")]
    SingularEffectiveChannel,
}

pub type Result<T> = std::result::Result<T, Error>;
