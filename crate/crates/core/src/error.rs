use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("vortex number ill-defined: |phi| = {min_modulus:.3e} on the measuring contour")]
    IllDefinedVortexNumber { min_modulus: f64 },
    #[error("Bradlow condition violated: tau * vol - 4 pi d = {margin:.6e} (must be > 0)")]
    BradlowViolation { margin: f64 },
    #[error("zero at {position} lies within {clearance} of the domain boundary")]
    ZeroTooCloseToBoundary { position: String, clearance: f64 },
    #[error("Newton iteration did not converge in {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("linear solve failed after {iters} iterations (residual {residual:.3e})")]
    LinearSolve { iters: usize, residual: f64 },
    #[error("zeros closer than {threshold:.3e} (separation {separation:.3e})")]
    NearCoincidence { separation: f64, threshold: f64 },
    #[error("metric is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    MetricNotPositive { min_eigenvalue: f64 },
    #[error("CFL violation: dt/h = {ratio:.4} exceeds {limit}")]
    CflViolation { ratio: f64, limit: f64 },
    #[error("Gauss constraint violated by initial data: residual {residual:.3e}")]
    GaussViolation { residual: f64 },
    #[error("evolution blew up at t = {t:.4}: energy {energy:.6e} vs initial {initial:.6e}")]
    BlowUp { t: f64, energy: f64, initial: f64 },
    #[error("trajectory never enters the ball of radius {radius} around coincidence")]
    NoEncounter { radius: f64 },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
