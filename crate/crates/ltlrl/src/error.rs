use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed HOA document.
    #[error("HOA parse error at line {line}: {msg}")]
    HoaParse { line: usize, msg: String },

    /// Structurally valid input that violates automaton semantics
    /// (non-deterministic Rabin transitions, unknown propositions, ...).
    #[error("automaton semantic error: {0}")]
    Semantic(String),

    /// The task cannot be satisfied by any run: no accepting state is
    /// reachable from the initial state in the pruned automaton.
    #[error("task unsatisfiable: no accepting automaton state reachable under pruning")]
    Unsatisfiable,

    /// Bad user-supplied configuration (pattern parameters, grid labels,
    /// reward ordering, schedule values, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Action not available at the queried state.
    #[error("invalid action {action} at state {state}")]
    InvalidAction { state: usize, action: usize },

    /// Explicit product construction would exceed the configured state cap.
    #[error("product too large: {states} states exceeds cap {cap}")]
    ProductTooLarge { states: usize, cap: usize },

    /// A constructed verification instance does not satisfy the hypothesis
    /// of the statement being checked; running it would prove nothing.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
