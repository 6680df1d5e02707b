//! Crate-wide error type with a stable mapping to CLI exit codes.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong, grouped by how the CLI reports it:
/// configuration mistakes (exit 2), data/ingestion problems (exit 3), and
/// numeric failures during estimation (exit 4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid option values, inconsistent flags, malformed config files.
    #[error("config error: {0}")]
    Config(String),

    /// The input file could not be read at all.
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The output location could not be written.
    #[error("cannot write {path}: {source}")]
    IoWrite {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A column required by the schema is absent from the CSV header.
    #[error("missing column {column:?} in {path}")]
    MissingColumn { column: String, path: String },

    /// A cell could not be parsed as a finite number. `row` is the 1-based
    /// data row (the header is row 0).
    #[error("non-numeric value {value:?} in column {column:?}, data row {row}")]
    BadCell {
        column: String,
        row: usize,
        value: String,
    },

    /// A parsed value is NaN or infinite.
    #[error("non-finite value in column {column:?}, data row {row}")]
    NonFinite { column: String, row: usize },

    /// Doses must be nonnegative; zero means control.
    #[error("negative dose {value} in data row {row}")]
    NegativeDose { row: usize, value: f64 },

    /// The period indicator of a repeated cross-section must be exactly 0 or 1.
    #[error("period must be 0 or 1, got {value} in data row {row}")]
    BadPeriod { row: usize, value: f64 },

    /// Estimation needs at least one control (dose = 0) row.
    #[error("dataset has no control rows (dose = 0)")]
    NoControls,

    /// Estimation needs at least one treated (dose > 0) row.
    #[error("dataset has no treated rows (dose > 0)")]
    NoTreated,

    /// Repeated cross-sections need observations in both periods.
    #[error("both periods are required, found only period {0}")]
    SinglePeriod(u8),

    /// Any other violated dataset invariant.
    #[error("data error: {0}")]
    Data(String),

    /// Non-finite intermediates, degenerate densities, failed quadrature.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Exit code the CLI reports for this error: 2 for configuration
    /// problems, 3 for data problems, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) => 4,
            _ => 3,
        }
    }
}
