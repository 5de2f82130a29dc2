use thiserror::Error;

use crate::raster::PgmError;

/// Errors produced by the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pgm(#[from] PgmError),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("scene geometry out of bounds: {0}")]
    SceneBounds(String),

    #[error("image is {width}x{height}, gradient stencil needs at least 3x3")]
    ImageTooSmall { width: usize, height: usize },

    #[error("orientation undefined for a zero gradient vector")]
    ZeroGradient,

    #[error("edge pixel at column {col}, row {row} has zero gradient")]
    ZeroGradientAt { col: usize, row: usize },

    #[error("canny thresholds need 0 < low <= high, got low={low}, high={high}")]
    Thresholds { low: f64, high: f64 },

    #[error("invalid hough parameters: {0}")]
    HoughParams(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("accumulator geometry mismatch: {0}")]
    Geometry(String),

    #[error("cannot fold an accumulator with {0} theta bins (needs a multiple of 4)")]
    FoldBins(usize),

    #[error("threshold fraction must lie in (0, 1], got {0}")]
    ThresholdFraction(f64),

    #[error("window of size {size} at ({col}, {row}) does not fit a {width}x{height} image")]
    WindowBounds {
        col: usize,
        row: usize,
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid window: {0}")]
    Window(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
