use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: points are not unisolvent for polynomial degree {degree}")]
    Unisolvent { context: String, degree: usize },
    #[error("{context}: factorization failed ({reason})")]
    Conditioning { context: String, reason: String },
    #[error("{} evaluation point(s) not covered by any patch, first at ({:.6}, {:.6})", points.len(), first[0], first[1])]
    Coverage { points: Vec<usize>, first: [f64; 2] },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:.3e}")]
    Solver { iterations: usize, residual: f64 },
    #[error("diverged at t={time}")]
    Diverged { time: f64 },
    #[error("eigenvalue iteration did not converge (block ending at {index})")]
    Eigen { index: usize },
    #[error("eigenpair residual {residual:.3e} exceeds {bound:.3e}")]
    EigenResidual { residual: f64, bound: f64 },
    #[error("dense problem of size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("velocity vanishes at t={time}")]
    ZeroVelocity { time: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
