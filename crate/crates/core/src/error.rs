use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quadrature order {0}: must be at least 1")]
    InvalidOrder(usize),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("target {target:.6e} outside bracket values [{f_hi:.6e}, {f_lo:.6e}]")]
    BracketFailure { target: f64, f_lo: f64, f_hi: f64 },

    #[error("receiver and source points coincide (distance {0:.3e} m)")]
    CoincidentPoints(f64),

    #[error("receiver index {index} out of range for {count} receivers")]
    ReceiverIndex { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("every user is switched off; no current can be designed")]
    AllUsersOff,

    #[error("linear system (lambda*I + Phi) is numerically singular for user {0}")]
    SingularSolve(usize),

    #[error("channel Gram matrix is singular (condition number {0:.3e})")]
    SingularGram(f64),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
