use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("iteration did not converge: {0}")]
    Convergence(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("numerically singular system: {0}")]
    SingularSystem(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("regression error: {0}")]
    Regression(String),

    #[error("infeasible sampling region: {0}")]
    InfeasibleRegion(String),

    #[error("zero divergence: {0}")]
    ZeroDivergence(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("operator is not unitary: {0}")]
    NotUnitary(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("phase aliasing: {0}")]
    PhaseAliasing(String),

    #[error("post-selection failed: {0}")]
    PostSelectionFailure(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("perfect fit violates the no-perfect-fit assumption: {0}")]
    PerfectFit(String),

    #[error("empty operator: {0}")]
    EmptyOperator(String),

    #[error("cancellation: {0}")]
    Cancellation(String),

    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
