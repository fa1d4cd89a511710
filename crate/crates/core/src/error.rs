//! Error type shared by all solver modules.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone)]
pub enum Error {
    /// Time-window construction failed (bad span, step, or step/span mismatch).
    InvalidGrid(String),
    /// An operation combined waveforms living on different time grids.
    GridMismatch {
        context: &'static str,
    },
    /// Pointwise division hit a divisor sample that is not strictly positive.
    NonpositiveDivisor {
        index: usize,
        time: f64,
        value: f64,
    },
    /// A characteristic impedance sample violated Z(t) > 0.
    NonpositiveImpedance {
        index: usize,
        time: f64,
        value: f64,
    },
    /// Malformed matrix entry (out of bounds, duplicate key, nonfinite value).
    Matrix(String),
    /// System assembly with inconsistent dimensions.
    Dimension(String),
    /// Problem-file syntax or semantic error, with the 1-based source line.
    Parse {
        line: usize,
        msg: String,
    },
    /// The system failed its SPD/dimension validation before the run.
    InvalidSystem(String),
    /// Illegal partition: coverage, part structure, or edge placement.
    Partition(String),
    /// A subgraph produced by vertex splitting is not non-negative definite.
    SubgraphNotSnnd {
        part: usize,
        matrix: char,
        detail: String,
    },
    /// Transmission-line history does not contain the requested sweep.
    MissingHistory {
        wtl: usize,
        sweep: i64,
    },
    /// History push for a sweep that is already stored or out of order.
    HistoryPush {
        wtl: usize,
        sweep: i64,
        msg: &'static str,
    },
    /// Dense factorization failed: the matrix is not positive definite.
    NotSpd(String),
    /// A solve produced NaN or infinite samples.
    NonFinite(String),
    /// A waveform magnitude exceeded the divergence cap during iteration.
    Diverged {
        sweep: usize,
        magnitude: f64,
    },
    /// Local-solve input arity does not match the subproblem's ports.
    PortMismatch(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid time grid: {msg}"),
            Error::GridMismatch { context } => {
                write!(f, "waveform grids differ in {context}")
            }
            Error::NonpositiveDivisor { index, time, value } => write!(
                f,
                "nonpositive divisor sample {value} at index {index} (t = {time})"
            ),
            Error::NonpositiveImpedance { index, time, value } => write!(
                f,
                "impedance must satisfy Z(t) > 0; sample {value} at index {index} (t = {time})"
            ),
            Error::Matrix(msg) => write!(f, "matrix entry error: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::Parse { line, msg } => write!(f, "line {line}: {msg}"),
            Error::InvalidSystem(msg) => write!(f, "invalid system: {msg}"),
            Error::Partition(msg) => write!(f, "illegal partition: {msg}"),
            Error::SubgraphNotSnnd { part, matrix, detail } => write!(
                f,
                "subgraph of part {part}: {matrix} is not symmetric non-negative definite ({detail})"
            ),
            Error::MissingHistory { wtl, sweep } => {
                write!(f, "wtl {wtl}: no stored port state for sweep {sweep}")
            }
            Error::HistoryPush { wtl, sweep, msg } => {
                write!(f, "wtl {wtl}: cannot push sweep {sweep}: {msg}")
            }
            Error::NotSpd(msg) => write!(f, "matrix not positive definite: {msg}"),
            Error::NonFinite(msg) => write!(f, "nonfinite result: {msg}"),
            Error::Diverged { sweep, magnitude } => write!(
                f,
                "iteration diverged at sweep {sweep}: waveform magnitude {magnitude:e}"
            ),
            Error::PortMismatch(msg) => write!(f, "port mismatch: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
