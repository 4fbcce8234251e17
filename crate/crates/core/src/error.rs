//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical layers of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A direction vector expected to be unit length is not.
    #[error("direction must be a unit vector (|n| = {norm})")]
    NonUnitDirection { norm: f64 },

    /// An eigenvalue sits at or below the support floor, so a logarithm or
    /// inverse is undefined.
    #[error("support violation: eigenvalue {eigenvalue:e} at or below floor {floor:e}")]
    SupportViolation { eigenvalue: f64, floor: f64 },

    /// A matrix expected to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian (max entry deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    /// A density matrix does not have unit trace, within tolerance.
    #[error("matrix does not have unit trace (deviation {deviation:e})")]
    NotUnitTrace { deviation: f64 },

    /// A density matrix has an eigenvalue below the negativity tolerance.
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    /// Adaptive quadrature exhausted its panel budget before reaching the
    /// requested tolerance; `achieved` is the final error estimate.
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureConvergence { achieved: f64, requested: f64 },

    /// An interpolation or series fit did not reach its target accuracy.
    #[error("approximation did not converge: achieved {achieved:e}, requested {requested:e}")]
    FitConvergence { achieved: f64, requested: f64 },

    /// Two switching functions whose supports must be disjoint overlap.
    #[error("switching supports overlap or touch (gap {gap})")]
    OverlappingSupports { gap: f64 },

    /// Population reached the top Fock level of a truncated mode.
    #[error("Fock truncation leakage: mode {mode} top-level population {population:e} exceeds {threshold:e}")]
    TruncationLeakage {
        mode: usize,
        population: f64,
        threshold: f64,
    },

    /// Halving the integrator step changed the result by more than tolerance.
    #[error("step-size convergence failure: halving h changed the result by {delta:e} (tolerance {tolerance:e})")]
    StepConvergence { delta: f64, tolerance: f64 },

    /// Too few data points for the requested fit or check.
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),

    /// An internal cross-check between two evaluation routes disagreed.
    #[error("consistency cross-check failed: {0}")]
    Consistency(String),

    /// The spectral function of a discrete-mode model is a sum of lines, so a
    /// pointwise spectrum value is undefined.
    #[error("discrete-mode spectrum is distributional; pointwise evaluation undefined")]
    DistributionalSpectrum,
}

pub type Result<T> = std::result::Result<T, Error>;
