use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("invalid weight table: {0}")]
    InvalidWeights(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("exact likelihood needs nonnegative integer exponents; use log_likelihood for weight {0}")]
    NonIntegerExponent(f64),

    #[error("infeasible point: smallest entry 1 + a_i b_j = {min_entry:e}")]
    Infeasible { min_entry: f64 },

    #[error("not rank-two representable: second singular value ratio {ratio:e}")]
    NotRankTwo { ratio: f64 },

    #[error("unequal margins: largest deviation from n is {deviation:e}")]
    UnequalMargins { deviation: f64 },

    #[error("zero point has no canonical form")]
    ZeroPoint,

    #[error("order hypothesis violated: a_1 b_1 = {product:e} after sorting")]
    OrderHypothesis { product: f64 },

    #[error("margin normalization did not converge after {sweeps} sweeps (margin error {error:e})")]
    NonConvergence { sweeps: usize, error: f64 },

    #[error("candidates degenerate to J: need 0 < t < s, got s = {s}, t = {t}")]
    DegenerateCandidates { s: f64, t: f64 },

    #[error("tie between candidates {0} and {1}")]
    Tie(String, String),

    #[error("no start converged")]
    NoSuccessfulStarts,

    #[error("stationarity residual {residual:e} too large for classification")]
    ResidualPrecondition { residual: f64 },

    #[error("degenerate (numerator collapses below degree 6)")]
    DegeneratePolynomial,

    #[error("no real stationary tail: discriminant {discriminant}")]
    NoRealTail { discriminant: f64 },

    #[error("invalid tail pair input: {0}")]
    InvalidTail(String),

    #[error("not canonical: {0}")]
    NotCanonical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
