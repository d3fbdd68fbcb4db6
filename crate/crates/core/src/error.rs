use alloc::string::String;

/// Errors raised anywhere in the core crate.
///
/// The variant name is what the CLI prints as the error kind, so keep the
/// names stable.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("p = {0} is too small (need p > 3)")]
    PTooSmall(u64),
    #[error("modular polynomial parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("modular polynomial for l = {ell} has X-degree {found}, expected {expected}")]
    DegreeMismatch { ell: u64, expected: usize, found: usize },
    #[error("no modular polynomial available for l = {0}")]
    Unavailable(u64),
    #[error("seed j-invariant is not supersingular")]
    SeedNotSupersingular,
    #[error("l = {0} is invalid for this p")]
    InvalidLevel(u64),
    #[error("neither D-exponent convention yields a symmetric operator (asymmetry {0:e})")]
    SymmetrizationFailed(f64),
    #[error("operators do not commute (commutator norm {0:e})")]
    NotCommuting(f64),
    #[error("operators belong to different graphs")]
    OperatorMismatch,
    #[error("eigenvectors {0} and {1} share a tag vector; the joint spectrum is degenerate")]
    DegenerateJointSpectrum(usize, usize),
    #[error("joint diagonalization failed validation (residual {0:e})")]
    JointDiagonalizationFailed(f64),
    #[error("prime window is empty")]
    EmptyWindow,
    #[error("separation needs at least two eigenvectors")]
    SingleEigenvector,
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(usize),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("parameter out of domain: {0}")]
    DomainError(String),
    #[error("group specs do not match")]
    SpecMismatch,
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Short variant name, used for error reporting at the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPrime(_) => "NonPrime",
            Error::PTooSmall(_) => "PTooSmall",
            Error::ParseError { .. } => "ParseError",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::Unavailable(_) => "Unavailable",
            Error::SeedNotSupersingular => "SeedNotSupersingular",
            Error::InvalidLevel(_) => "InvalidLevel",
            Error::SymmetrizationFailed(_) => "SymmetrizationFailed",
            Error::NotCommuting(_) => "NotCommuting",
            Error::OperatorMismatch => "OperatorMismatch",
            Error::DegenerateJointSpectrum(..) => "DegenerateJointSpectrum",
            Error::JointDiagonalizationFailed(_) => "JointDiagonalizationFailed",
            Error::EmptyWindow => "EmptyWindow",
            Error::SingleEigenvector => "SingleEigenvector",
            Error::UnknownVertex(_) => "UnknownVertex",
            Error::NotNormalized(_) => "NotNormalized",
            Error::DomainError(_) => "DomainError",
            Error::SpecMismatch => "SpecMismatch",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }
}
