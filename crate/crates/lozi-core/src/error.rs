use thiserror::Error;

/// Crate-wide error type.
///
/// Every fallible operation in the certified pipelines reports through
/// this enum so that callers (CLI, C ABI) can map failures onto a small
/// set of exit codes without string matching.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("not invertible")]
    NotInvertible,

    #[error("no saddle on this side")]
    NoSaddleOnSide,

    #[error("eigenvalues are not a saddle pair")]
    NotASaddle,

    #[error("indeterminate sign{}", step_suffix(.step))]
    IndeterminateSign { step: Option<usize> },

    #[error("branch budget exceeded: 2^{n} branches requested, cap is 2^{cap}")]
    BranchBudgetExceeded { n: usize, cap: usize },

    #[error("fragment budget exceeded: more than {budget} singularity-free pieces")]
    FragmentBudgetExceeded { budget: usize },

    #[error("non-invertible branch")]
    NonInvertibleBranch,

    #[error("stable direction undefined (degenerate eigenvalue)")]
    StableDirectionUndefined,

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid quadrilateral: {0}")]
    InvalidQuadrilateral(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fixed line is unbounded inside the branch domain")]
    UnboundedFixedLine,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
