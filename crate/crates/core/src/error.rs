use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field has {found} values but the mesh has {expected} nodes")]
    MeshMismatch { expected: usize, found: usize },

    #[error("point {point:?} lies outside the closed domain (distance {distance:e})")]
    OutsideDomain { point: Vec<f64>, distance: f64 },

    #[error("ball of radius {radius} around {center:?} is not contained in the domain")]
    BallNotContained { center: Vec<f64>, radius: f64 },

    #[error("integral operator is not positive at node {node} (value {value:e}); lambda is likely inadmissible")]
    NonPositivePotential { node: usize, value: f64 },

    #[error("domain is not star-shaped about {center:?} (min (x-c).nu = {min_support:e})")]
    NotStarShaped { center: Vec<f64>, min_support: f64 },

    #[error("solve at q = {q} ended with status {status}")]
    NotConverged { q: f64, status: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
