use core::fmt;

/// Errors raised by the core algorithms. All of them are argument or
/// configuration problems; nothing in this crate performs IO.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A pixel buffer does not match its declared dimensions.
    PixelCount { expected: usize, actual: usize },
    /// A pixel value fell outside `[0, 1]` (or was NaN).
    PixelRange { index: usize },
    /// A patch was not 32x64.
    PatchShape { rows: usize, cols: usize },
    /// Grid dimensions outside `1..=64` cells.
    GridShape { rows: usize, cols: usize },
    /// A label was not a valid place index.
    LabelOutOfRange { label: usize, n_places: usize },
    /// Score vectors of different lengths were merged.
    LengthMismatch { expected: usize, actual: usize },
    /// An input sequence was empty or too short.
    TooFew { what: &'static str, min: usize, actual: usize },
    /// A configuration value is outside its valid domain.
    InvalidConfig(&'static str),
    /// A textual value (grid, voting mode) could not be parsed.
    Parse(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::PixelCount { expected, actual } => {
                write!(f, "expected {expected} pixels, got {actual}")
            }
            Error::PixelRange { index } => write!(f, "pixel {index} is outside [0, 1]"),
            Error::PatchShape { rows, cols } => {
                write!(f, "patch must be 32x64, got {rows}x{cols}")
            }
            Error::GridShape { rows, cols } => {
                write!(f, "grid {rows}x{cols} must have between 1 and 64 cells")
            }
            Error::LabelOutOfRange { label, n_places } => {
                write!(f, "label {label} out of range for {n_places} places")
            }
            Error::LengthMismatch { expected, actual } => {
                write!(f, "score vector length {actual} does not match {expected}")
            }
            Error::TooFew { what, min, actual } => {
                write!(f, "need at least {min} {what}, got {actual}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
