use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("points belong to different spaces ({0:#x} vs {1:#x})")]
    SpaceMismatch(u64, u64),
    #[error("invalid space parameters: {0}")]
    InvalidSpace(String),
    #[error("point outside the canonical chart: {0}")]
    InvalidPoint(String),
    #[error("endpoints are conjugate: minimizing geodesic is not unique")]
    ConjugatePair,
    #[error("curvature is undefined at the cone vertex")]
    VertexCurvature,
    #[error("resource limit exceeded: {what} needs {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("series tail {tail:.3e} exceeds budget relative to value {value:.3e}")]
    TruncationWarning { tail: f64, value: f64 },
    #[error("heat mass outside the discretization: renormalization factor {factor}")]
    TruncationError { factor: f64 },
    #[error("entropy is infinite (atomic measure)")]
    InfiniteEntropy,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
