//! Error type shared by the numerical routines.

use alloc::string::String;
use core::fmt;

/// Failure modes surfaced by the library.
///
/// Monte Carlo drivers are expected to attach their own seed-path context
/// when propagating these.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on the inputs was violated.
    InvalidInput(String),
    /// Two eigenangles met (within 1e-12 mod 2pi) while beta < 1.
    Collision {
        /// Time at which the collision was detected.
        time: f64,
        /// Indices of the colliding particles.
        pair: (usize, usize),
    },
    /// Adaptive step halving hit its depth limit near a collision.
    StepHalvingExceeded {
        /// Time at which refinement gave up.
        time: f64,
    },
    /// A quantity that must stay finite overflowed or became NaN.
    NonFinite(String),
    /// The evaluation point is numerically on top of the spectrum.
    SpectrumProximity,
    /// A discretization failed its internal consistency check.
    Numerical(String),
    /// Self-normalized importance sampling collapsed onto too few samples.
    WeightDegeneracy {
        /// Effective sample size that was observed.
        ess: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Collision { time, pair } => write!(
                f,
                "eigenangle collision at t = {time}: particles {} and {}",
                pair.0, pair.1
            ),
            Error::StepHalvingExceeded { time } => {
                write!(f, "step halving exceeded 20 levels at t = {time}")
            }
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::SpectrumProximity => write!(f, "evaluation point too close to the spectrum"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::WeightDegeneracy { ess } => {
                write!(f, "importance weights degenerate (ESS = {ess:.2} < 50)")
            }
        }
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
