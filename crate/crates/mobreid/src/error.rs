use thiserror::Error;

/// Errors produced by loading, validation, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("out-of-range value at line {line}: {message}")]
    OutOfRange { line: usize, message: String },

    #[error("duplicate sample for user {user} at day {day} bin {bin} (line {line})")]
    DuplicateSample {
        user: u64,
        day: u16,
        bin: u8,
        line: usize,
    },

    #[error("cell ({x}, {y}) outside {width}x{height} grid")]
    CellOutOfGrid { x: u32, y: u32, width: u32, height: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("degenerate clustering: {0}")]
    DegenerateClustering(String),

    #[error("ambiguous weekday inference: candidate offsets {0:?} tie on both violation counts")]
    AmbiguousWeekday(Vec<u8>),

    #[error("no users eligible for metric: {0}")]
    NoEligibleUsers(String),

    #[error("population sampler failed at ({lat}, {lon}): {message}")]
    SamplerFailure { lat: f64, lon: f64, message: String },

    #[error("{0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True when the error signals a computational degeneracy rather than bad input.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::UndefinedCorrelation(_)
                | Error::DegenerateClustering(_)
                | Error::AmbiguousWeekday(_)
                | Error::NoEligibleUsers(_)
        )
    }
}
