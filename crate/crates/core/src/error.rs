use thiserror::Error;

pub type Result<T> = std::result::Result<T, PinchError>;

#[derive(Debug, Error)]
pub enum PinchError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not inside the domain: {0}")]
    OutsideDomain(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("ill-conditioned metric (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("finite-difference stencil leaves the domain of the potential at step {step:e}")]
    StencilOutsideDomain { step: f64 },

    #[error("metric field `{0}` has no Kähler potential")]
    NoPotential(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("vanishing differential: {0}")]
    VanishingDifferential(String),

    #[error("perturbation loses positive definiteness; largest admissible epsilon is {max_admissible:e}")]
    PerturbationTooLarge { max_admissible: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
