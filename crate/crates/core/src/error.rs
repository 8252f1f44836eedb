use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge (residual estimate {residual:.3e})")]
    Accuracy { residual: f64 },

    #[error("matching failed at k = {k}: residual {residual:.3e} exceeds {tol:.1e}")]
    MatchingFailure { k: f64, residual: f64, tol: f64 },

    #[error("phase unwrap failed between k = {k_lo} and k = {k_hi} (jump {jump:.4} rad)")]
    UnwrapFailure { k_lo: f64, k_hi: f64, jump: f64 },

    #[error("ambiguous b(0) classification: extrapolated |b(0)| = {extrapolated:.4}")]
    AmbiguousClassification { extrapolated: f64, probe_abs_b: Vec<f64> },

    #[error("bound-state count unstable under refinement: {coarse} vs {fine}")]
    Resolution { coarse: usize, fine: usize },

    #[error("unsupported for this potential: {0}")]
    Unsupported(String),

    #[error("spec parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
