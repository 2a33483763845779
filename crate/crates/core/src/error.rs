use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index ({i}, {j}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        rows: usize,
        cols: usize,
    },

    #[error("duplicate entry ({0}, {1})")]
    DuplicateEntry(usize, usize),

    #[error("empty basis")]
    EmptyBasis,

    #[error("singular values must be nonnegative and sorted in nonincreasing order")]
    UnsortedSpectrum,

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("objective requires spectrum")]
    SpectrumUnavailable,

    #[error("degenerate test mask")]
    DegenerateTestMask,

    #[error("no observations")]
    NoObservations,

    #[error("matrix {rows}x{cols} exceeds the full-SVD cap of {cap}x{cap}; use fit_accel")]
    TooLargeForFullSvd { rows: usize, cols: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no valid records in {0}")]
    NoRecords(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
