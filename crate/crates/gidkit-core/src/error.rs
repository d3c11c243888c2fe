//! Error type shared by all operations in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across graph construction, estimand
/// evaluation, model enumeration, and witness synthesis.
#[derive(Debug, Error)]
pub enum Error {
    /// A vertex named in an argument does not exist in the graph.
    #[error("unknown vertex `{0}`")]
    InvalidVertex(String),

    /// An argument violates a structural precondition (duplicate names,
    /// empty sets where nonempty is required, overlapping sets, …).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `q_marginalize` was asked to marginalize to a set that is not
    /// ancestral in the relevant induced subgraph, so the rewrite is unsound.
    #[error("`{set}` is not an ancestral set in the induced subgraph over `{context}`")]
    NotAncestral { set: String, context: String },

    /// The query was proven non-identifiable; no estimand exists.
    #[error("effect is not identifiable from the given inputs: {0}")]
    NotIdentifiable(String),

    /// An operation requires a strictly positive distribution but the
    /// supplied table or model has a zero cell.
    #[error("input distribution is not strictly positive: {0}")]
    NonPositiveInput(String),

    /// A table or estimand was used with variables/cardinalities that do not
    /// match its declared scope.
    #[error("scope mismatch: {0}")]
    ScopeMismatch(String),

    /// An enumeration would exceed the configured state-space budget
    /// (`GIDKIT_MAX_STATES`, default 10^7 joint states).
    #[error("state space too large: {states} states exceeds the limit of {limit}")]
    TooLarge { states: u64, limit: u64 },

    /// A realization (assignment of values to variables) is outside the
    /// declared domain of some variable.
    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    /// An internal invariant failed — e.g. a verification step contradicted
    /// the decision procedure. Always a bug, never a user error.
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),

    /// The witness search exhausted its strategies without producing a
    /// verified counterexample.
    #[error("witness construction failed: {0}")]
    ConstructionFailed(String),
}
