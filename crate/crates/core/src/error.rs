use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Validation errors (bad input) and numerical failures are kept apart so the
/// CLI can map them to different exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("tau must lie in the upper half plane, got {0}")]
    NonHyperbolicTau(Complex64),
    #[error("point {z} is within {dist:.3e} of a pole")]
    PoleProximity { z: Complex64, dist: f64 },
    #[error("p = {0} is a half period")]
    HalfPeriodP(Complex64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("collocation nullspace is not one-dimensional (singular value gap {gap:.3e})")]
    DegenerateNullspace { gap: f64 },
    #[error("W^2 depends on z (relative spread {spread:.3e})")]
    ZDependence { spread: f64 },
    #[error("branch point polish did not converge near {seed} (residual {residual:.3e})")]
    NonIsolatedZero { seed: Complex64, residual: f64 },
    #[error("found {found} torus zeros, expected {expected}")]
    ZeroCountMismatch { found: usize, expected: usize },
    #[error("a zero of Phi lies on a cell boundary")]
    BoundaryZero,
    #[error("ambiguous sign pairing (margin {margin:.3e})")]
    AmbiguousPairing { margin: f64 },
    #[error("divisor case mismatch: {0}")]
    CaseMismatch(String),
    #[error("zero multiset is not symmetric under negation (defect {defect:.3e})")]
    SymmetryViolation { defect: f64 },
    #[error("rational fit inconclusive up to degree {max_degree} (best residual {best_residual:.3e})")]
    FitInconclusive {
        max_degree: usize,
        best_residual: f64,
        residuals: Vec<f64>,
    },
    #[error("contour passes through a zero or pole")]
    ContourThroughZero,
    #[error("argument-principle quadrature did not converge")]
    NonConvergentQuadrature,
    #[error("pipeline failed at parameter {param}: {source}")]
    PipelineFailure {
        param: Complex64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::NonHyperbolicTau(_) | Error::HalfPeriodP(_) | Error::InvalidInput(_) => true,
            Error::PipelineFailure { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn at(self, param: Complex64) -> Error {
        match self {
            e @ Error::PipelineFailure { .. } => e,
            e => Error::PipelineFailure {
                param,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
