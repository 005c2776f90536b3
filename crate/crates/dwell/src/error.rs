//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical and series machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A quadrature did not reach the requested tolerance; carries the best
    /// estimate together with the error bound at the deepest refinement.
    #[error("quadrature tolerance not reached: estimate {estimate}, error bound {error_bound}")]
    QuadratureAccuracy { estimate: f64, error_bound: f64 },

    /// An integral diverged or produced a non-finite value.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// The integrand passes through a zero of a quantity that must stay
    /// one-signed (nodeless assumption violated).
    #[error("singular integrand: {0}")]
    SingularIntegrand(String),

    /// Malformed input (non-monotone grid, empty coefficient list, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Argument outside the domain of the function.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// A projection denominator vanished.
    #[error("degenerate overlap: {0}")]
    DegenerateOverlap(String),

    /// Exponent shifting could not keep intermediates in range.
    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    /// Series operation on a degenerate leading coefficient.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// Requested series order not reachable with the configured depth/cutoff.
    #[error("series accuracy: {0}")]
    SeriesAccuracy(String),

    /// Arithmetic breakdown inside an eigenvalue solver.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A root/eigenvalue bracket does not enclose a sign change.
    #[error("bracket failure: {0}")]
    BracketFailure(String),

    /// A minimizer could not bracket a minimum.
    #[error("optimization failure: {0}")]
    OptimizationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
