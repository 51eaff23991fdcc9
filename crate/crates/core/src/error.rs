use thiserror::Error;

use crate::numerics::CertifiedReal;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("contraction ratio out of range for map {index}: {ratio}")]
    RatioOutOfRange { index: usize, ratio: String },

    #[error("negative contraction ratio for map {index}: orientation-reversing maps are not supported")]
    NegativeRatio { index: usize },

    #[error("image of map {index} escapes [0,1]")]
    ImageOutOfUnit { index: usize },

    #[error("normalization violated: {0}")]
    Normalization(String),

    #[error("symbol {symbol} out of range 1..={m}")]
    SymbolOutOfRange { symbol: usize, m: usize },

    #[error("generation too large: {count} vertices reached at generation {k} (cap {cap})")]
    GenerationTooLarge { k: usize, count: usize, cap: usize },

    #[error("GFTC not confirmed within {generations} generations")]
    GftcNotConfirmed { generations: usize },

    #[error("type refinement did not stabilize: {0}")]
    RefinementUnstable(String),

    #[error("incidence matrix is not irreducible")]
    NotIrreducible,

    #[error("no sign change on bracket")]
    NoSignChange,

    #[error("root finder did not converge; best interval {best:?}")]
    NoConvergence { best: CertifiedReal },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undecidable at precision {bits} bits: {what}")]
    Undecidable { bits: u32, what: String },

    #[error("comparison inconclusive at {bits} bits: {what}")]
    Inconclusive { bits: u32, what: String },

    #[error("residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },

    #[error("untyped island [{left}, {right}]")]
    Untyped { left: String, right: String },

    #[error("endpoint {0} is not a field point of the frame")]
    NotFieldPoint(String),

    #[error("assumption A violated at island [{left}, {right}]")]
    AssumptionA { left: String, right: String },

    #[error("assumption B not verified: {0}")]
    AssumptionB(String),

    #[error("relaxed mode guard failed: {0}")]
    RelaxedGuard(String),

    #[error("threshold generation {k} exceeds the search cap {cap}")]
    ThresholdInfeasible { k: usize, cap: usize },

    #[error("search budget exhausted after {seconds:.1}s; best lower bound {best:.12} is not certified")]
    BudgetExceeded { seconds: f64, best: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
}
