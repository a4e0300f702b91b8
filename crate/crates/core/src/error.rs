use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:e} exceeds tolerance {tolerance:e}")]
    Asymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("data was computed against a different operator space")]
    SpaceMismatch,

    #[error("atom {atom} has repeated eigenvalues {first} and {second}")]
    RepeatedEigenvalues { atom: usize, first: f64, second: f64 },

    #[error("rank-deficient fit basis for bi-degree (d={d}, k={k}); try a lower d")]
    RankDeficient { d: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph is not a lattice built by grid_2d")]
    NotLattice,

    #[error("graph is disconnected: vertex {0} is unreachable")]
    Disconnected(usize),

    #[error("signal row {0} has zero variance")]
    ZeroVariance(usize),

    #[error("no uniqueness set found after {attempts} attempts; best condition number {best_condition:e}")]
    NoUniquenessSet { attempts: usize, best_condition: f64 },

    #[error("recovery bound is degenerate: lambda_j = {0} is too close to 1")]
    DegenerateBound(f64),

    #[error("all posterior weights underflow; try a smaller gamma")]
    PosteriorUnderflow,

    #[error("fast-edge set contains a cycle through edge ({0}, {1})")]
    CyclicFastEdges(usize, usize),

    #[error("no fiber weights for X-atom {0}")]
    MissingFiber(usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RepeatedEigenvalues { .. }
                | Error::RankDeficient { .. }
                | Error::NoUniquenessSet { .. }
                | Error::DegenerateBound(_)
                | Error::PosteriorUnderflow
                | Error::Invariant(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
