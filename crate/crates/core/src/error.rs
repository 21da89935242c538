use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown domain `{0}` (expected lshape, square2x2 or unit-square)")]
    UnknownDomain(String),

    #[error("unknown benchmark `{0}` (expected lshape, kellogg1, kellogg2 or layer)")]
    UnknownBenchmark(String),

    #[error("invalid {kind} id {id} (mesh has {count})")]
    InvalidId { kind: &'static str, id: usize, count: usize },

    #[error("degenerate element {element}: area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("solver residual {achieved:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { achieved: f64, tolerance: f64 },

    #[error("estimator `{0}` is undefined for this scheme")]
    SchemeMismatch(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("quadrature rule `{name}` fails exactness for x^{i} y^{j}: error {error:e}")]
    Quadrature { name: &'static str, i: u32, j: u32, error: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
