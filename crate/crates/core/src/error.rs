use thiserror::Error;

/// Errors reported by the control and optimization routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix dimensions do not match the operation's requirements.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A closed-loop or open-loop matrix is not Hurwitz where stability is required.
    #[error("matrix is not Hurwitz: {0}")]
    NotHurwitz(String),

    /// The Lyapunov equation has no unique solution for the given data.
    #[error("no unique Lyapunov solution: {0}")]
    LyapunovSingular(String),

    /// The stabilizing Riccati solution could not be computed.
    #[error("riccati failure: {0}")]
    RiccatiFailure(String),

    /// A cost was requested for a policy that does not stabilize the plant.
    #[error("policy is not stabilizing; cost is infinite ({0})")]
    InfiniteCost(String),

    /// A (policy, level) pair lies outside the epigraph of the cost.
    #[error("point not in epigraph: {0}")]
    NotInEpigraph(String),

    /// A map was evaluated at a point violating its open-set domain
    /// (singular certificate block, Schur condition failure, ...).
    #[error("degenerate point: {0}")]
    Degenerate(String),

    /// A matrix that must be invertible is singular to working precision.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// The conic model is malformed (unknown variable, shape mismatch, ...).
    #[error("modeling error: {0}")]
    Model(String),

    /// The interior-point solver stopped without a usable status.
    #[error("solver failure: {0}")]
    Solver(String),

    /// An input violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
}
