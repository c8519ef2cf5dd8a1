use thiserror::Error;

/// Errors raised by the numerical operations of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample at node {node}")]
    NonFinite { node: usize },

    #[error("not strictly psh at origin: {0}")]
    NotStrictlyPsh(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("shrink b: gluing radius sigma = {sigma} is not below the chart radius {delta}")]
    GluingRadius { sigma: f64, delta: f64 },

    #[error("achieved C2 distance {achieved} is not below the requested {requested}")]
    GluingTolerance { achieved: f64, requested: f64 },

    #[error("use grid_envelope: {0}")]
    NoSymmetry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver did not converge after {iterations} iterations (last update {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("annulus too thin: {0}")]
    AnnulusTooThin(String),

    #[error("non-monotone slice family: a_{lo} < a_{hi} by {excess:e} at node {node}")]
    NonMonotoneSlices {
        lo: usize,
        hi: usize,
        node: usize,
        excess: f64,
    },

    #[error("lambda {lambda} outside [0, {cutoff})")]
    LambdaOutOfRange { lambda: f64, cutoff: f64 },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("region touches the masked-out boundary layer")]
    RegionTouchesBoundary,

    #[error("open polyline")]
    OpenPolyline,

    #[error("leaf left the grid at ({x}, {y})")]
    LeafExited { x: f64, y: f64 },

    #[error("degenerate fiber metric at ({x}, {y})")]
    DegenerateFiber { x: f64, y: f64 },

    #[error("non-injective tubular map: anchors {0} and {1} share an endpoint")]
    NonInjective(usize, usize),

    #[error("anchor spacing too coarse: {0}")]
    TooCoarse(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
