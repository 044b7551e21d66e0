//! Error type shared by the numerical subsystems.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the geometry and flow routines.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Unknown builtin model name.
    UnknownModel(String),
    /// A required model parameter is missing or out of range.
    ModelParameter(String),
    /// A point left the chart domain of a model.
    OutsideChart,
    /// A linear system used to extract frame data was singular.
    SingularFrame,
    /// `[xi,[xi,v]]` failed to be parallel to `v` within tolerance.
    NotParallel { residual: f64 },
    /// Assumption (A) fails: the dual volume ratio is not positive.
    VolumeRatioNotPositive { ratio: f64 },
    /// Input sequences disagree in length.
    LengthMismatch { expected: usize, got: usize },
    /// A denominator that must be positive vanished (point curve).
    PointCurve,
    /// The curve is too rough for spectral differentiation.
    SpectralTail { fraction: f64 },
    /// A time step was refused because the state is blowing up.
    BlowUp { norm: f64 },
    /// Precondition on the sign of `a` failed.
    SignCondition(String),
    /// No sign change of the lift function within the search horizon.
    TurningHorizonExceeded { t: f64 },
    /// Root refinement failed to converge.
    RootNotConverged,
    /// No matching orbit through the requested point.
    NoMatchingOrbit,
    /// `b` vanishes (or `a` is not positive) inside a construction window.
    WindowCondition(String),
    /// The nearly-Dirac opening exceeds the admissible threshold.
    OpeningTooLarge { opening: f64, eps0: f64 },
    /// Construction windows of two masses overlap inconsistently.
    OverlappingWindows,
    /// The periodicity matrix `R(1) - id` is singular.
    SingularMonodromy,
    /// The push flow exhausted its horizon without reaching positivity.
    HorizonExceeded { min_a: f64 },
    /// Invalid argument (negative tolerance, zero length, ...).
    InvalidArgument(String),
    /// Expression parsing failed.
    Expr(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::UnknownModel(name) => write!(f, "unknown model `{name}`"),
            CoreError::ModelParameter(msg) => write!(f, "model parameter: {msg}"),
            CoreError::OutsideChart => write!(f, "point outside chart domain"),
            CoreError::SingularFrame => write!(f, "singular frame system"),
            CoreError::NotParallel { residual } => {
                write!(f, "[xi,[xi,v]] not parallel to v (residual {residual:.3e})")
            }
            CoreError::VolumeRatioNotPositive { ratio } => {
                write!(f, "dual volume ratio not positive ({ratio:.3e})")
            }
            CoreError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            CoreError::PointCurve => write!(f, "degenerate point curve"),
            CoreError::SpectralTail { fraction } => {
                write!(f, "spectral tail energy too large ({fraction:.3e})")
            }
            CoreError::BlowUp { norm } => write!(f, "step refused: H1 norm {norm:.3e} over ceiling"),
            CoreError::SignCondition(msg) => write!(f, "sign condition: {msg}"),
            CoreError::TurningHorizonExceeded { t } => {
                write!(f, "no admissible lift root within horizon at t = {t}")
            }
            CoreError::RootNotConverged => write!(f, "root refinement did not converge"),
            CoreError::NoMatchingOrbit => write!(f, "no matching orbit in the tubular neighborhood"),
            CoreError::WindowCondition(msg) => write!(f, "window condition: {msg}"),
            CoreError::OpeningTooLarge { opening, eps0 } => {
                write!(f, "opening {opening:.3e} exceeds threshold {eps0:.3e}")
            }
            CoreError::OverlappingWindows => write!(f, "mass construction windows overlap"),
            CoreError::SingularMonodromy => write!(f, "R(1) - id is singular"),
            CoreError::HorizonExceeded { min_a } => {
                write!(f, "push horizon exceeded (min a = {min_a:.3e})")
            }
            CoreError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            CoreError::Expr(msg) => write!(f, "expression: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, CoreError>;
