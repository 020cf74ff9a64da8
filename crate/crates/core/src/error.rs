use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the spectral pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A potential description failed validation.
    #[error("invalid potential spec: {0}")]
    PotentialSpec(String),

    /// The adaptive integrator could not reach the requested tolerance.
    #[error("integrator failure at x = {x}: {reason}")]
    IntegratorFailure { x: f64, reason: String },

    /// `s(lambda)` is numerically singular; `lambda` is at or near an eigenvalue.
    #[error("characteristic matrix singular at lambda = {lambda}")]
    SingularCharacteristicMatrix { lambda: Complex64 },

    /// The characteristic determinant nearly vanishes on an integration contour.
    #[error("characteristic determinant too small on contour (min |det| = {min_abs_det:.3e})")]
    ZeroOnContour { min_abs_det: f64 },

    /// An argument-principle integral failed to round to an integer.
    #[error("winding number {raw} not close to an integer (residual {residual:.3e})")]
    NonIntegerWinding { raw: f64, residual: f64 },

    /// Eigenvalues persist at the top of the search region after enlarging it.
    #[error("eigenvalue search height exceeded (H = {height})")]
    SearchHeightExceeded { height: f64 },

    /// Zero counts of subregions failed to reconcile with their parent region.
    #[error("winding counts inconsistent: expected {expected}, accounted for {found}")]
    WindingInconsistency { expected: usize, found: usize },

    /// A quadrature contour passes too close to a located eigenvalue.
    #[error("contour within {distance:.3e} of eigenvalue {eigenvalue}")]
    ContourTooCloseToEigenvalue {
        eigenvalue: Complex64,
        distance: f64,
    },

    /// A dense eigendecomposition failed to converge.
    #[error("dense eigensolver failed: {0}")]
    EigensolverFailure(String),

    /// Inconsistent grids or dimensions between composed objects.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument outside the domain of the requested computation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
