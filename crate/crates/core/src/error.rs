use core::fmt;

/// Every failure the numerical core can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    OddPointCount(usize),
    TooFewPoints(usize),
    NonpositiveHalfPeriod(f64),
    /// A sample was NaN or infinite.
    NonFinite,
    LengthMismatch { expected: usize, found: usize },
    GridMismatch,
    /// `m(-xi) != conj(m(xi))` at the given wavenumber although a real output was requested.
    NonHermitianMultiplier { wavenumber: f64, deviation: f64 },
    /// The surface touched (or came within the pinch-off floor of) the axis.
    NonpositiveRadius { min_radius: f64 },
    NoConvergence { iterations: usize, residual: f64 },
    /// `min eta` fell below the pinch-off floor inside a Runge-Kutta stage.
    StepRejected { time: f64, min_radius: f64 },
    WindowTooShort { samples: usize },
    /// An unscaled Bessel evaluation would overflow; use the scaled variants.
    Overflow { argument: f64 },
    /// A paradifferential product that should be real left an imaginary part.
    NonRealOutput { residue: f64 },
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OddPointCount(n) => write!(f, "point count {n} is odd"),
            Error::TooFewPoints(n) => write!(f, "point count {n} is below the minimum of 8"),
            Error::NonpositiveHalfPeriod(l) => write!(f, "half period {l} is not positive"),
            Error::NonFinite => write!(f, "field contains non-finite samples"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} samples, found {found}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::NonHermitianMultiplier { wavenumber, deviation } => write!(
                f,
                "multiplier violates conj(m(xi)) = m(-xi) at xi = {wavenumber} (deviation {deviation:e})"
            ),
            Error::NonpositiveRadius { min_radius } => {
                write!(f, "surface radius {min_radius} is below the pinch-off floor")
            }
            Error::NoConvergence { iterations, residual } => write!(
                f,
                "elliptic solve stalled after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::StepRejected { time, min_radius } => write!(
                f,
                "step from t = {time} rejected: stage radius {min_radius} below the pinch-off floor"
            ),
            Error::WindowTooShort { samples } => {
                write!(f, "only {samples} samples in the growth-fit window (need 10)")
            }
            Error::Overflow { argument } => {
                write!(f, "unscaled Bessel evaluation overflows at x = {argument}")
            }
            Error::NonRealOutput { residue } => {
                write!(f, "paradifferential output has imaginary residue {residue:e}")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for Error {}
