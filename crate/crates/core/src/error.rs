use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 2..=4)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("body has empty interior")]
    Degenerate,
    #[error("vertex and facet lists are inconsistent: {0}")]
    InconsistentBody(String),
    #[error("a 3D or 4D body needs both vertices and facets")]
    MissingRepresentation,
    #[error("linear map is singular")]
    SingularMap,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("point is not inside the body")]
    NotInBody,
    #[error("containment precondition violated: {0}")]
    Precondition(String),
    #[error("no contact points within the band")]
    NoContacts,
    #[error("no exact representation for {0}")]
    NoExactRepresentation(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("tolerance mismatch: {0}")]
    ToleranceMismatch(String),
    #[error("profile is not in convex position: {0}")]
    NotConvexPosition(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
