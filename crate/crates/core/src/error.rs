use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown analytic family `{0}`")]
    UnknownFamily(String),
    #[error("parameter `{0}` must be finite")]
    NonFiniteParameter(&'static str),
    #[error("order {0} must be non-negative")]
    NegativeOrder(f64),
    #[error("L^p exponent p = {0} is below 1")]
    InvalidExponent(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field has {got} samples, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(
        "mollifier index {index} unresolved: width/index = {scaled_width} < 4h = {limit}"
    )]
    UnresolvedMollifier {
        index: u32,
        scaled_width: f64,
        limit: f64,
    },
    #[error("invalid step plan: {0}")]
    InvalidPlan(String),
    #[error("non-finite state encountered at t = {t}")]
    NumericalBlowUp { t: f64 },
    #[error("boundary mass fraction {fraction:e} exceeds {limit:e} at t = {t}")]
    BoundaryMass { t: f64, fraction: f64, limit: f64 },
    #[error("trajectory has {0} snapshots, at least 3 are required")]
    TooFewSnapshots(usize),
    #[error("snapshot index {index} out of range ({len} snapshots)")]
    SnapshotIndex { index: usize, len: usize },
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("dimension {d} not supported here: {reason}")]
    Dimension { d: usize, reason: &'static str },
    #[error("constants ledger is missing `{0}`")]
    MissingLedgerEntry(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
