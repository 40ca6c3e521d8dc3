use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite: {0}")]
    NonSpdMatrix(String),
    #[error("invalid degrees of freedom {df} for dimension {dim}")]
    InvalidDf { df: f64, dim: usize },
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate range: {0}")]
    DegenerateRange(String),
    #[error("all likelihood increments are zero")]
    AllZeroIncrements,
    #[error("annealing schedule did not reach 1 within {0} iterations")]
    IterationCap(usize),
    #[error("all eigenvalues are zero")]
    DegenerateSpectrum,
    #[error("conditioning matrix of curve {0} is singular after ridge")]
    SingularConditioning(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero vector")]
    ZeroVector,
    #[error("{0}")]
    Validation(String),
    #[error("state invariant violated: {0}")]
    Invariant(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
