use std::path::PathBuf;

/// Every failure the library reports.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not interior to the unit ball: |z| = {norm}")]
    NotInterior { norm: f64 },

    #[error("point is not on the unit sphere: |z| = {norm}")]
    NotOnSphere { norm: f64 },

    #[error("tube radius {0} outside (0, 2]")]
    BadRadius(f64),

    #[error("Green function is singular at the origin")]
    SingularAtOrigin,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no tangential directions in dimension 1")]
    NoTangentialDirections,

    #[error("truncation tail bound {bound:e} not achievable below {target:e} (|a| = {radius})")]
    TailUnachievable { bound: f64, target: f64, radius: f64 },

    #[error("expansion would produce {terms} terms (limit {limit})")]
    ExpansionTooLarge { terms: usize, limit: usize },

    #[error("non-finite integrand value at node {node}")]
    NonFinite { node: usize },

    #[error("cap/tube under-resolved: {used} nodes < floor {floor}")]
    UnderResolved { used: usize, floor: usize },

    #[error("lambda-weighted integral requires a positive decay exponent (got {0})")]
    LambdaGuard(f64),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("ambiguous Forelli-Rudin case: {0}")]
    AmbiguousCase(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
