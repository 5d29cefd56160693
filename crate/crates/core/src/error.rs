use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A value lies outside the domain of the function it was passed to.
    Domain { what: &'static str, value: f64 },
    /// NaN or infinite input where a finite number is required.
    NonFinite(&'static str),
    /// Value outside an allowed closed interval.
    OutOfRange { what: &'static str, value: f64, min: f64, max: f64 },
    /// Invalid parameters or an inconsistent combination of options.
    Config(String),
    /// Array or matrix shapes that do not line up.
    Shape(String),
    /// Input for which the requested quantity is undefined (e.g. all-zero weights).
    Degenerate(&'static str),
    /// Least-squares fit with a constant regressor.
    SingularFit,
    /// Operation not valid in the current state of the object.
    State(&'static str),
    /// Training diverged.
    NanLoss { epoch: usize, batch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what}: value {value} outside domain"),
            Error::NonFinite(what) => write!(f, "{what} must be finite"),
            Error::OutOfRange { what, value, min, max } => {
                write!(f, "{what} = {value} outside [{min}, {max}]")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::SingularFit => write!(f, "singular fit: regressor is constant"),
            Error::State(msg) => write!(f, "invalid state: {msg}"),
            Error::NanLoss { epoch, batch } => {
                write!(f, "loss became NaN at epoch {epoch}, batch {batch}")
            }
        }
    }
}

impl core::error::Error for Error {}
