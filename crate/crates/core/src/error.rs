use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("map text is empty")]
    EmptyMap,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unknown map character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("map has no free cells")]
    NoFreeCells,
    #[error("cell ({row}, {col}) is outside the {height}x{width} map")]
    OutOfBounds { row: usize, col: usize, height: usize, width: usize },
    #[error("cell ({row}, {col}) is an obstacle")]
    NotFree { row: usize, col: usize },
    #[error("mask is {found_h}x{found_w} but the map is {height}x{width}")]
    MaskShape { found_h: usize, found_w: usize, height: usize, width: usize },
    #[error("got {found} actions for {expected} agents")]
    ActionCount { expected: usize, found: usize },
    #[error("field-of-view side length must be odd and positive, got {0}")]
    InvalidFieldOfView(usize),
    #[error("agent {0} does not exist")]
    InvalidAgent(usize),
    #[error("{height}x{width} map is not divisible into a {size}x{size} mini-map")]
    MiniMapDivisibility { height: usize, width: usize, size: usize },
    #[error("no path from ({0}, {1}) to ({2}, {3})")]
    Unreachable(usize, usize, usize, usize),
    #[error("tour needs at least one point")]
    EmptyTour,
    #[error("tensor shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid period {period} for series of length {len}")]
    InvalidPeriod { period: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
