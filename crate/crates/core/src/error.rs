use thiserror::Error;

pub type Result<T> = std::result::Result<T, GrfError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrfError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("metric not positive definite at node {node}: min eigenvalue {min_eig:e}")]
    NotSpd { node: usize, min_eig: f64 },

    #[error("polyform not closed: |dH|_inf = {residual:e}")]
    NotClosed { residual: f64 },

    #[error("form degree {degree} out of range for dimension {dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },

    #[error("time step {dt:e} exceeds stability bound {dt_max:e}")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("density {value:e} below floor at node {node} (t = {t})")]
    BelowFloor { node: usize, value: f64, t: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { what: String, iterations: usize, residual: f64 },

    #[error("problem size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("container format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GrfError {
    fn from(e: std::io::Error) -> Self {
        GrfError::Io(e.to_string())
    }
}
