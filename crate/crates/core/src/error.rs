use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} > {tolerance:.1e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("eigensolver failed to converge ({fingerprint})")]
    NoConvergence { fingerprint: String },

    #[error("eigenpair residual {residual:.3e} exceeds {bound:.3e} ({fingerprint})")]
    Residual {
        residual: f64,
        bound: f64,
        fingerprint: String,
    },

    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "steady state is not unique ({zero_modes} zero modes); \
         compute it block by block"
    )]
    AmbiguousSteadyState { zero_modes: usize },

    #[error("Liouvillian has a growing mode (Re λ = {real_part:.3e})")]
    GrowingMode { real_part: f64 },

    #[error("construction check failed: {0}")]
    Construction(String),

    #[error("fit failed: {0}")]
    Fit(String),
}
