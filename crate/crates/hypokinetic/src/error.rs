use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("velocity grid: {0}")]
    Grid(String),

    #[error("grid mismatch: expected {expected} entries, got {got}")]
    Mismatch { expected: usize, got: usize },

    #[error("equilibrium negative at v = {v}: {value:e}")]
    NegativeDensity { v: f64, value: f64 },

    #[error("collision kernel out of bounds: {0}")]
    KernelBounds(String),

    #[error("mass-defect correction {defect:e} exceeds {limit:e} of the operator norm")]
    MassDefect { defect: f64, limit: f64 },

    #[error("nonpositive coercivity ratio {0:e}")]
    Coercivity(f64),

    #[error("half-line flux moment of M diverges for s = {0} with diffusive walls")]
    DivergentWallMoment(f64),

    #[error("boundary identity residual {0:e} above tolerance")]
    BoundaryResidual(f64),

    #[error("CFL violated: dt = {dt:e} exceeds {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("field not admissible: {0}")]
    Inadmissible(String),

    #[error("slope {measured:.3} deviates from {expected:.3} by more than {tol}")]
    Slope { measured: f64, expected: f64, tol: f64 },

    #[error("second moment not converged: {0}")]
    NotConverged(String),

    #[error("no delta in the ladder satisfies norm equivalence")]
    NoDelta,

    #[error("decay series unusable: {0}")]
    Series(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
