use thiserror::Error;

use crate::simulator::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("hyperplane at offset {offset} does not hit the interior (support [{lo}, {hi}])")]
    NotHitting { offset: f64, lo: f64, hi: f64 },

    /// A split or retraction produced a piece below the geometric tolerance.
    /// Callers resample; under any continuous driving measure this has probability zero.
    #[error("degenerate child polytope")]
    DegenerateChild,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid driving measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("cell has zero hyperplane mass")]
    ZeroMass,

    #[error("cell {0} is not alive at the requested time")]
    CellNotAlive(CellId),

    #[error("unknown cell {0}")]
    UnknownCell(CellId),

    #[error("kernel is not moderate and no finite proposal bound was supplied")]
    NonModerate,

    #[error("event budget of {cap} division events exceeded")]
    BudgetExceeded { cap: usize },

    #[error("inconsistent boundary path: {0}")]
    InconsistentBoundary(String),

    #[error("negative input {0}")]
    NegativeInput(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("observation window plus margin {margin} is not inside the simulation window")]
    InsufficientMargin { margin: f64 },

    #[error("relative entropy diverged ({diverging} of {draws} draws had a vanishing reference density)")]
    Diverged { diverging: usize, draws: usize },

    #[error("invalid tessellation: {0}")]
    InvalidTessellation(String),

    #[error("invalid time {0}; times live in [0, 1]")]
    InvalidTime(f64),
}
