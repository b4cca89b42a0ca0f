use thiserror::Error;

/// Errors raised by the exact transform, kernel and harmonicity machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Elements or measures from different ambient structures were combined.
    #[error("structure mismatch: {0}")]
    Mismatch(String),

    #[error("no image assigned to letter `{0}`")]
    UnassignedLetter(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A documented precondition does not hold (non-probability input,
    /// unbounded rule, weight out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mixture weights must sum to {expected}, got {actual}")]
    WeightSum { expected: String, actual: String },

    /// Enumeration or convolution exceeded its node budget.
    #[error("budget of {budget} nodes exceeded at depth {depth_reached}")]
    Budget { budget: u64, depth_reached: usize },

    /// The stopping time is infinite almost surely.
    #[error("divergent stopping time: {0}")]
    Divergence(String),

    /// Finite prefix data cannot decide the requested relation.
    #[error(
        "undecidable with the given prefix data: need at least {needed} letters, have {available}"
    )]
    Undecidable { needed: usize, available: usize },

    /// Martin kernel denominator vanishes within the horizon.
    #[error("target {0} not reached within horizon {1}")]
    NotReached(String, usize),

    #[error("cannot evaluate function at {element}: {reason}")]
    Eval { element: String, reason: String },

    /// Internal cross-check failed; indicates invalid input data upstream.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("all {0} trajectories aborted at the step cap")]
    AllAborted(u64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
