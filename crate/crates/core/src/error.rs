use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no records supplied")]
    EmptyInput,

    #[error("record {record}: coordinate ({x}, {y}) does not align with the inferred lattice")]
    IrregularLattice { record: usize, x: f64, y: f64 },

    #[error("record {record}: cell ({i}, {j}) already holds record {first}")]
    DuplicateCoordinate {
        record: usize,
        first: usize,
        i: usize,
        j: usize,
    },

    #[error("record {record}: negative uncertainty {uncertainty}")]
    NegativeUncertainty { record: usize, uncertainty: f64 },

    #[error("record {record}: non-finite {field}")]
    NonFiniteValue { record: usize, field: &'static str },

    #[error("inverted interval: lower bound {lo} exceeds upper bound {hi}")]
    InvertedInterval { lo: f64, hi: f64 },

    #[error("ladder top exceeds {limit} cells (num_sizes={num_sizes}, factor={factor})")]
    LadderOverflow {
        num_sizes: usize,
        factor: u64,
        limit: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "grid too small: {n_big_x}x{n_big_y} big pixels of side {big_side} for a {n_x}x{n_y} grid, \
         need at least {min_x}x{min_y}; feasible s_K = {feasible_side} (largest feasible num_sizes = {feasible_num_sizes})"
    )]
    GridTooSmall {
        n_x: usize,
        n_y: usize,
        big_side: u64,
        n_big_x: usize,
        n_big_y: usize,
        min_x: usize,
        min_y: usize,
        feasible_side: usize,
        feasible_num_sizes: usize,
    },

    #[error("cannot compute quantiles of an empty sample")]
    EmptyValues,

    #[error("expected {expected} quantile boundaries, got {got}")]
    BoundaryMismatch { expected: usize, got: usize },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),

    #[error("unrecognised header {0:?}; expected x,y,z,u or x,y,z,z_lo,z_hi")]
    SchemaError(String),

    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("ASCII grid headers differ: {0}")]
    HeaderMismatch(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png encoding failed: {0}")]
    Encode(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error came from the filesystem rather than from the data or parameters.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::AtLine { source, .. } => source.is_io(),
            _ => false,
        }
    }

    /// The innermost error, skipping line-number wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}
