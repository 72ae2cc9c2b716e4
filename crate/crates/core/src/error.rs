use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument was NaN or infinite where a finite value is required.
    NonFinite(&'static str),
    /// A parameter is outside its allowed domain.
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// Regression design has a single distinct abscissa.
    DegenerateDesign,
    InvalidHistogram(&'static str),
    InvalidModel(&'static str),
    /// Not enough peaks, bins or points for the requested operation.
    InsufficientData {
        needed: usize,
        found: usize,
        what: &'static str,
    },
    /// Fewer than two prominent maxima; an explicit initial model is required.
    NeedsExplicitInit {
        maxima: usize,
    },
    /// Two adjacent densities do not cross between their means.
    NoInteriorIntersection {
        lower: usize,
    },
    Capacity {
        requested: u64,
        limit: u64,
    },
    ZeroFlux,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(name) => write!(f, "`{name}` must be finite"),
            Error::Domain { name, value, expected } => {
                write!(f, "`{name}` = {value} is out of range: expected {expected}")
            }
            Error::DegenerateDesign => f.write_str("linear fit needs at least two distinct x values"),
            Error::InvalidHistogram(why) => write!(f, "invalid histogram: {why}"),
            Error::InvalidModel(why) => write!(f, "invalid model: {why}"),
            Error::InsufficientData { needed, found, what } => {
                write!(f, "need at least {needed} {what}, found {found}")
            }
            Error::NeedsExplicitInit { maxima } => write!(
                f,
                "found {maxima} prominent maxima (need 2); supply an explicit initial model"
            ),
            Error::NoInteriorIntersection { lower } => write!(
                f,
                "peaks {lower} and {} have no density intersection between their means",
                lower + 1
            ),
            Error::Capacity { requested, limit } => {
                write!(f, "{requested} pulses exceed the storage budget of {limit}")
            }
            Error::ZeroFlux => f.write_str("photon flux is zero; efficiency is undefined"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}
