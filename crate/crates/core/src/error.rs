use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid angle: sin φ = {numerator}/{denominator} is not in [-1, 1]")]
    InvalidAngle { numerator: i64, denominator: i64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: expected {expected:?}, got {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("pump angle of parameters ({params}) does not match the lattice ({lattice})")]
    AngleMismatch { params: String, lattice: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at t = {time}: h = {step:e}")]
    StepUnderflow { time: f64, step: f64 },

    #[error("trace drift {drift:e} at t = {time} exceeds {limit:e}")]
    TraceDrift { time: f64, drift: f64, limit: f64 },

    #[error("steady state not converged by t = {time}: residual {residual:e}, last change {change:e}")]
    NotConverged {
        time: f64,
        residual: f64,
        change: f64,
    },

    #[error("Wigner grid does not cover the support: boundary/peak ratio {ratio:e}")]
    SupportViolation { ratio: f64 },

    #[error("Fock cutoff too small: kernel tail weight {tail:e}")]
    CutoffTooSmall { tail: f64 },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
