use thiserror::Error;

/// Errors raised by the analytic solvers and the model constructors.
///
/// Simulation routines avoid this type for in-run conditions: a run that
/// produces too little data is reported through flags on the result rather
/// than by failing, so long parameter sweeps survive individual bad cells.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum AoiError {
    /// The model description is structurally unusable (bad dimensions,
    /// negative rate, self-loop, reset map entries outside {0, 1}, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The discrete chain does not visit every state from every state, so
    /// no unique stationary distribution exists.
    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),

    /// A linear system that the theory guarantees solvable came back
    /// singular or failed its residual check; usually a symptom of extreme
    /// parameters driving the matrix past double precision.
    #[error("singular or ill-conditioned linear system: {0}")]
    SingularSystem(String),

    /// A stationary or age component that must be non-negative came out
    /// materially negative (beyond round-off tolerance).
    #[error("solution component for state {state} is negative: {value}")]
    NegativeSolution { state: usize, value: f64 },

    /// Scalar parameters outside their admissible domain (rates must be
    /// positive, success probabilities must lie in (0, 1], ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A bracketed scalar minimization found its minimum on a bracket
    /// endpoint, meaning the bracket does not contain an interior minimum.
    #[error("no interior minimum in bracket [{lo}, {hi}]")]
    BracketError { lo: f64, hi: f64 },
}

/// Advisory produced when parameters are valid but sit outside the range
/// where double-precision evaluation is well conditioned. Callers decide
/// whether to surface it; nothing downstream refuses to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeWarning {
    pub message: String,
}

impl std::fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}
