use std::fmt;

/// Errors produced by model validation, solvers, and integrators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its physical domain. The message names the
    /// offending field and the constraint it violates.
    Domain(String),
    /// The steady-state equation degenerated to `0 = constant` with a
    /// nonzero constant: no intensity satisfies it.
    NoSolution(String),
    /// The requested drive direction has no path into the resonators
    /// (backward drive with zero inter-ring coupling).
    NoTransmission(String),
    /// The requested transmission coefficient is undefined (zero drive).
    UndefinedTransmission(String),
    /// An internal cross-check failed: reconstructed quantities disagree
    /// beyond their guaranteed tolerance. Indicates a bug or an extremely
    /// ill-conditioned parameter set, never a routine outcome.
    Inconsistent(String),
    /// Adaptive step size underflowed at time `t`; the problem is too stiff
    /// for the explicit integrator at the requested tolerance.
    Stiffness { t: f64 },
    /// Density-matrix trace drifted by `drift` from its initial value,
    /// exceeding the integration quality threshold.
    TraceDrift { t: f64, drift: f64 },
    /// Requested Fock-space dimension exceeds the configured budget.
    CutoffBudget { dim: usize, budget: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NoSolution(msg) => write!(f, "no steady-state solution: {msg}"),
            Error::NoTransmission(msg) => write!(f, "no transmission path: {msg}"),
            Error::UndefinedTransmission(msg) => write!(f, "transmission undefined: {msg}"),
            Error::Inconsistent(msg) => write!(f, "internal consistency check failed: {msg}"),
            Error::Stiffness { t } => {
                write!(f, "step size underflow at t = {t:.6e} s; system too stiff")
            }
            Error::TraceDrift { t, drift } => write!(
                f,
                "density-matrix trace drifted by {drift:.3e} at t = {t:.6e} s"
            ),
            Error::CutoffBudget { dim, budget } => write!(
                f,
                "Fock dimension {dim} exceeds the {budget}-state budget; lower the cutoffs"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
