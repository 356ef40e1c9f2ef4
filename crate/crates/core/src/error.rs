use thiserror::Error;

use crate::newton::NewtonResult;

pub type Result<T> = std::result::Result<T, LodError>;

#[derive(Debug, Error)]
pub enum LodError {
    #[error("mesh subdivision count must be positive")]
    InvalidMeshSize,

    #[error("refinement level count must be positive")]
    InvalidRefinement,

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("vertex {0} is not an interior vertex of the coarse mesh")]
    NotInteriorVertex(usize),

    #[error("invalid layer count {0}: must be >= 1 in steps of 0.5")]
    InvalidLayers(f64),

    #[error("coefficient is not symmetric positive definite at ({x:.6}, {y:.6})")]
    Indefinite { x: f64, y: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-positive hat volume at coarse node {0}")]
    NonPositiveVolume(usize),

    #[error("constraint rows of the patch around coarse node {node} are rank deficient")]
    PatchRankDeficient { node: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("corrector for coarse node {node} failed: {source}")]
    Corrector {
        node: usize,
        #[source]
        source: Box<LodError>,
    },

    #[error("linear solve residual {residual:.3e} exceeds tolerance")]
    LinearSolve { residual: f64 },

    #[error("Newton iteration did not converge within {} iterations (|G| = {:.3e})",
        .0.iterations, .0.residual_norms.last().copied().unwrap_or(f64::NAN))]
    NewtonNotConverged(Box<NewtonResult>),

    #[error("damping factor underflow in Newton iteration {iteration} (|G| = {residual:.3e})")]
    DampingUnderflow { iteration: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
