use thiserror::Error;

/// Problems found while loading or checking an instance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("cannot read instance: {0}")]
    Io(String),
    #[error("malformed instance: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

/// Failures of the path generator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("unknown od pair index {0}")]
    UnknownOdPair(usize),
    #[error("unknown vehicle type index {0}")]
    UnknownVehicle(usize),
    #[error("node {0} cannot reach node {1}")]
    Unreachable(String, String),
}

/// Failures of scenario construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario count must be positive")]
    EmptySet,
    #[error("adoption envelope has {got} periods, horizon has {want}")]
    EnvelopeLength { got: usize, want: usize },
    #[error("adoption envelope is invalid at period {0}: need 0 <= min <= max <= 1")]
    EnvelopeBounds(usize),
    #[error("scenario set does not match instance: {0}")]
    Mismatch(String),
}

/// Failures reported by a solver backend.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("model is infeasible")]
    Infeasible,
    #[error("model is unbounded")]
    Unbounded,
    #[error("solver stopped without a usable solution: {0}")]
    NoSolution(String),
    #[error("backend error: {0}")]
    Backend(String),
}

/// Failures of the decomposition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("integer cut needs an upper bound >= Q (bound {bound}, Q {q})")]
    CutBound { bound: f64, q: f64 },
    #[error("subproblem for scenario {0} is infeasible at a master-feasible point")]
    RecourseInfeasible(usize),
    #[error("first-stage point violates master constraints: {0}")]
    InfeasibleFirstStage(String),
    #[error("{0}")]
    Input(String),
}

/// Failures of the post-solve analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("elasticity is undefined: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Decomp(#[from] DecompError),
}
