use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("degenerate submanifold: {0}")]
    Degenerate(String),

    #[error("disjointness violated: minimum distance {min_alpha:.3e} rad is below the threshold {threshold:.3e} rad")]
    NotDisjoint { min_alpha: f64, threshold: f64 },

    #[error("antipodal disjointness violated: maximum distance {max_alpha:.6} rad exceeds pi - {margin:.3e}")]
    NotAntipodallyDisjoint { max_alpha: f64, margin: f64 },

    #[error("curves too close: minimum distance {min_distance:.3e} is below {threshold:.3e}")]
    TooClose { min_distance: f64, threshold: f64 },

    #[error("non-finite integrand value at node {0}")]
    NonFinite(String),

    #[error("stereographic projection failed: {0}")]
    Projection(String),
}

pub type Result<T> = std::result::Result<T, Error>;
