//! Crate error type.

use core::fmt;

/// Errors surfaced by the core numerics. Numerical aborts carry enough
/// context to report where the evolution failed; they are scientific output,
/// not conditions to be clamped away.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A point left the hyperbolicity domain |theta| < pi/2, or det(M) fell
    /// below the solvability threshold.
    HyperbolicityLoss {
        t: f64,
        r: f64,
        det: f64,
        theta: f64,
    },
    /// Frame quantities requested at r = 0 where the null frame is singular.
    DegeneratePoint { r: f64 },
    /// An unknown multiplier or Lorentz field identifier.
    UnknownMultiplier,
    /// Grid too coarse for the requested pulse width (needs dr <= delta / 8).
    UnderResolvedGrid { dr: f64, delta: f64 },
    /// Time step violates the CFL bound.
    CflViolation { dt: f64, dt_max: f64 },
    /// Non-finite value detected during evolution.
    NanDetected { t: f64, r: f64 },
    /// Gradient blow-up indicator tripped.
    BlowUp { t: f64, sup_grad: f64 },
    /// A cone or region leaves the stored history coverage.
    CoverageError { what: &'static str },
    /// History too short for the requested stencil depth.
    InsufficientHistory { needed: usize, have: usize },
    /// Fewer than the minimum number of samples for a fit.
    InsufficientPoints { needed: usize, have: usize },
    /// A validated input was out of range.
    InvalidInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::HyperbolicityLoss { t, r, det, theta } => write!(
                f,
                "hyperbolicity loss at t={t}, r={r}: det={det:.3e}, theta={theta:.6}"
            ),
            Error::DegeneratePoint { r } => {
                write!(f, "null frame is singular at r={r} (needs r > 0)")
            }
            Error::UnknownMultiplier => write!(f, "unknown multiplier id"),
            Error::UnderResolvedGrid { dr, delta } => write!(
                f,
                "grid spacing {dr} does not resolve pulse width delta={delta} (needs dr <= delta/8)"
            ),
            Error::CflViolation { dt, dt_max } => {
                write!(f, "time step {dt} exceeds CFL bound {dt_max}")
            }
            Error::NanDetected { t, r } => write!(f, "non-finite value at t={t}, r={r}"),
            Error::BlowUp { t, sup_grad } => {
                write!(f, "gradient blow-up at t={t}: sup|d theta| = {sup_grad:.3e}")
            }
            Error::CoverageError { what } => write!(f, "{what} leaves stored history coverage"),
            Error::InsufficientHistory { needed, have } => {
                write!(f, "history too short: need {needed} levels, have {have}")
            }
            Error::InsufficientPoints { needed, have } => {
                write!(f, "need at least {needed} samples, have {have}")
            }
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
