use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("match set is empty")]
    EmptyMatches,
    #[error("match set contains a non-finite coordinate at pair {0}")]
    NonFiniteMatch(usize),
    #[error("degenerate minimal configuration")]
    DegenerateConfiguration,
    #[error("too few correspondences: need {needed}, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("no model with at least 3 inliers was found")]
    NoModelFound,
    #[error("optimizer could not keep the points in front of the camera")]
    DivergedBehindCamera,
    #[error("information matrix is singular (rank < 6)")]
    SingularInformation,
    #[error("subset of {size} correspondences is too small (need 3)")]
    SubsetTooSmall { size: usize },
    #[error("{failed} of {total} re-estimations failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("matches unavailable for iteration {iteration}: {reason}")]
    MatchesUnavailable { iteration: usize, reason: String },
}
