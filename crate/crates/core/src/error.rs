//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("steady state is not unique: null-space dimension {null_dim}")]
    NonUniqueSteadyState { null_dim: usize },

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SteadyStateResidual { residual: f64, tolerance: f64 },

    #[error("no steady-state field: mean photon number {photon_number:.3e} is not positive")]
    NoSteadyStateField { photon_number: f64 },

    #[error("integrator step size underflow at t = {t:.6e} s")]
    StepSizeUnderflow { t: f64 },

    #[error(
        "thermal average not converged at quadrature order {order}: \
         {coarse:.10e} vs {fine:.10e} at doubled order"
    )]
    QuadratureNotConverged { order: usize, coarse: f64, fine: f64 },

    #[error(
        "mirror transmissions exceed the round-trip loss budget: \
         {total_ppm:.1} ppm > {budget_ppm:.1} ppm"
    )]
    LossBudgetExceeded { total_ppm: f64, budget_ppm: f64 },

    #[error("atoms too close to fit separately: separation {separation:.2} px < {min:.2} px")]
    OverlappingAtoms { separation: f64, min: f64 },

    #[error("ambiguous site assignment: residual {residual:.3} sites exceeds threshold {threshold:.3}")]
    AmbiguousAssignment { residual: f64, threshold: f64 },

    #[error("atoms assigned to the same lattice site")]
    SharedSite,

    #[error("no clear minimum in the {axis}-axis angle scan")]
    NoClearMinimum { axis: &'static str },

    #[error("fit did not converge after {iterations} iterations")]
    FitNotConverged { iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
