use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field does not match mesh: {0}")]
    FieldMismatch(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("unknown benchmark problem '{0}'")]
    UnknownBenchmark(String),

    #[error("Newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("line search stalled at iteration {iteration}: residual {residual:.3e}")]
    LineSearchFailed { iteration: usize, residual: f64 },

    #[error("transform domain violated (1 + mu*w <= 0) at {count} nodes, first at node {first}")]
    TransformDomain { count: usize, first: usize },

    #[error("ordering lost in monotone iteration: {0}")]
    OrderingLost(String),

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("singular linear system (pivot breakdown at row {0})")]
    SingularSystem(usize),

    #[error("continuation corrector failed: {0}")]
    CorrectorFailed(String),

    #[error("lambda {0} outside the branch range")]
    LambdaOutsideBranch(f64),

    #[error("eigenvalue iteration did not converge (residual {0:.3e})")]
    EigenDiverged(f64),

    #[error("expression error: {0}")]
    Expr(String),
}

pub type Result<T> = std::result::Result<T, Error>;
