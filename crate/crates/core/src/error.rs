use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid increment distribution: {0}")]
    InvalidDistribution(String),

    #[error("moment generating function requested at a = {a}, outside |a| <= {a0}")]
    MgfOutOfRange { a: f64, a0: f64 },

    #[error("convolution window of {entries} entries exceeds cap {cap}")]
    WindowOverflow { entries: usize, cap: usize },

    #[error("kernel dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("eigenvector not strictly positive at s = {s}")]
    NotPositive { s: i64 },

    #[error("window S_max = {s_max} too small: h(S_max)/max h = {edge_ratio:e}")]
    WindowTooSmall { s_max: i64, edge_ratio: f64 },

    #[error("grid point r = {r} falls outside the window")]
    GridOutsideWindow { r: f64 },

    #[error("transition row at s = {s} has pre-normalization defect {defect:e}")]
    TruncationDefect { s: i64, defect: f64 },

    #[error("enumeration of {paths} paths exceeds cap {cap}")]
    EnumerationCap { paths: u128, cap: u128 },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
