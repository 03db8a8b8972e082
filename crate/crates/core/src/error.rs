use num_complex::Complex64;
use thiserror::Error;

use crate::bethe::BethePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms at z = {z}")]
    NonConvergence { z: Complex64, terms: usize },

    #[error("point {x} is too close to a pole ({detail})")]
    PoleProximity { x: Complex64, detail: String },

    #[error("operator has a shift with non-negligible imaginary part: {0}")]
    ComplexShift(Complex64),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("insufficient samples: need {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("least-squares system is rank deficient (condition estimate {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("fitted polynomial has degree below {expected}")]
    DegreeDeficient { expected: usize },

    #[error("continuation stalled at c = {c}")]
    ContinuationStall {
        c: Complex64,
        last_good: Option<Box<BethePoint>>,
    },

    #[error("no convergent Bethe solution found for c = {0}")]
    NoSolution(Complex64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::ContinuationStall { .. }
                | Error::NoSolution(_)
                | Error::RankDeficient { .. }
                | Error::DegreeDeficient { .. }
                | Error::InsufficientSamples { .. }
        )
    }
}
