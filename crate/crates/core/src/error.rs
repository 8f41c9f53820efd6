use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Variant names double as the stable identifiers printed by the CLI on a
/// numeric failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh size {h} does not resolve the boundary portion (arc length {arc})")]
    UnresolvedGamma { h: f64, arc: f64 },
    #[error("Gamma_rho is empty for rho = {rho} (rho0 = {rho0})")]
    EmptyGammaRho { rho: f64, rho0: f64 },
    #[error("augmented domain construction failed: {0}")]
    Augmentation(String),
    #[error("tau = {tau} is not admissible: {reason}")]
    TauTooLarge { tau: f64, reason: String },
    #[error("point ({x}, {y}) lies outside the domain of the coefficient")]
    OutOfDomain { x: f64, y: f64 },
    #[error("mollification radius {eps} exceeds rho/2 = {limit}")]
    EpsilonTooLarge { eps: f64, limit: f64 },
    #[error("stiffness factorization failed (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },
    #[error("boundary flux is not compatible: |integral| = {integral:e}, norm = {norm:e}")]
    IncompatibleFlux { integral: f64, norm: f64 },
    #[error("point source at distance {dist} from the outer boundary (minimum {min})")]
    SourceTooCloseToBoundary { dist: f64, min: f64 },
    #[error("boundary portion has {nodes} nodes, at least 3 are required")]
    DegenerateGamma { nodes: usize },
    #[error("operators live on different spaces: {0}")]
    SpaceMismatch(String),
    #[error("leading term evaluated at its singular point")]
    EvalAtSingularity,
    #[error("rate fit needs at least 4 radii, got {0}")]
    InsufficientRadii(usize),
    #[error("trace or flux leaks outside Gamma: {leak:e} > {tol:e}")]
    SupportViolation { leak: f64, tol: f64 },
    #[error("kernel integration region is degenerate: {0}")]
    DegenerateIntersection(String),
    #[error("conductivity is not admissible: {0}")]
    NotAdmissible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "InvalidMesh",
            Error::UnresolvedGamma { .. } => "UnresolvedGamma",
            Error::EmptyGammaRho { .. } => "EmptyGammaRho",
            Error::Augmentation(_) => "Augmentation",
            Error::TauTooLarge { .. } => "TauTooLarge",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::IncompatibleFlux { .. } => "IncompatibleFlux",
            Error::SourceTooCloseToBoundary { .. } => "SourceTooCloseToBoundary",
            Error::DegenerateGamma { .. } => "DegenerateGamma",
            Error::SpaceMismatch(_) => "SpaceMismatch",
            Error::EvalAtSingularity => "EvalAtSingularity",
            Error::InsufficientRadii(_) => "InsufficientRadii",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::DegenerateIntersection(_) => "DegenerateIntersection",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::Parse(_) => "Parse",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
