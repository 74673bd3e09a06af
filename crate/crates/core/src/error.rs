use thiserror::Error;

use crate::calibration::CalibrationReport;

/// Which arbitrage bound an option price violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceBound {
    /// Price at or below discounted intrinsic value.
    Lower,
    /// Price at or above the discounted forward.
    Upper,
}

impl std::fmt::Display for PriceBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriceBound::Lower => f.write_str("lower bound Df*max(F-K,0)"),
            PriceBound::Upper => f.write_str("upper bound Df*F"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no implied vol: price {price} violates the {bound} (bound value {limit})")]
    NoSolution { price: f64, bound: PriceBound, limit: f64 },

    #[error("Poisson series truncation failed: tail mass {tail:e} after {terms} terms (lambda*T = {intensity})")]
    Truncation { tail: f64, terms: usize, intensity: f64 },

    #[error("scaled jump size {scaled} <= -1 would make the price nonpositive")]
    JumpTooLarge { scaled: f64 },

    #[error("fixed point did not converge after {} iterations (last mismatch {:.3e})", .report.iterations, .report.final_mismatch())]
    NonConvergence { report: Box<CalibrationReport> },

    #[error("diffusive vol went nonpositive ({value:.4e}) at strike {strike} in iteration {iteration}; jump parameters too aggressive for this surface")]
    NegativeVol { strike: f64, iteration: usize, value: f64 },

    #[error("required diffusive correlation {required:.6} is outside [-1, 1]; feasible lambda range is [0, {lambda_max:.6}]")]
    InfeasibleCorrelation { required: f64, lambda_max: f64 },

    #[error("moment fit failed: {0}")]
    MomentFit(String),

    #[error("correlation matrix is not positive semidefinite after repair (pivot {pivot:e} at row {row})")]
    Cholesky { row: usize, pivot: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
