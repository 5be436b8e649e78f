use thiserror::Error;

/// Errors surfaced by generation, recovery and evaluation routines.
///
/// Variants map one-to-one onto the failure modes the algorithms are allowed
/// to signal; anything else is a bug, not an `Error`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is zero (or numerically rank 0)")]
    ZeroMatrix,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("basis is rank deficient (rank {rank} < k = {k})")]
    RankDeficientBasis { rank: usize, k: usize },

    #[error("rank(A) = {rank} < k = {k}; outside the exact-recovery regime")]
    RankDeficientA { rank: usize, k: usize },

    #[error("hidden layer f(VX) is rank deficient")]
    RankDeficientHidden,

    #[error("no sign-pattern assignment realizes A as U f(VX)")]
    NoRealization,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("whitening failed: top-{0} moment spectrum not positive")]
    WhiteningFailed(usize),

    #[error("iteration did not converge")]
    NoConvergence,

    #[error("sign resolution ambiguous for row {0}")]
    AmbiguousSign(usize),

    #[error("no feasible sign for row {0}; initializer too coarse")]
    NoFeasibleSign(usize),

    #[error("no solution for pattern {0}")]
    NoSolution(usize),

    #[error("found {found} usable clusters, need {need}; raise the sample count")]
    TooFewClusters { found: usize, need: usize },

    #[error("label sum degenerate (zero vector)")]
    DegenerateSum,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
