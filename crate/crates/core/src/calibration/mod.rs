//! Calibration: the fixed-point recovery of a strike-dependent diffusive vol
//! per asset, correlation bookkeeping under the shared jump, and the search
//! for the jump tuple that reconciles an index skew with its components.

mod correlation;
mod fixed_point;
mod nelder_mead;
mod tuple;

pub use correlation::{
    diffusive_correlation_for_target, diffusive_correlation_matrix, feasible_lambda_max, total_correlation,
    total_correlation_matrix,
};
pub use fixed_point::{fixed_point_diffusive_vol, FixedPointConfig};
pub use nelder_mead::{minimize_in_box, NelderMeadConfig, NelderMeadResult};
pub use tuple::{
    basket_model_vols, calibrate_jump_tuple, diffusive_correlation_for_curves, SearchSpace, TupleConfig, TupleProblem,
};

use serde::Serialize;

use crate::jump::JumpParams;

/// Calibrated output carried by a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationOutcome {
    DiffusiveCurve {
        asset_id: String,
        strikes: Vec<f64>,
        vols: Vec<f64>,
    },
    JumpTuple {
        params: JumpParams,
        /// Best objective after each restart.
        restart_objectives: Vec<f64>,
        evaluations: usize,
    },
}

/// Convergence record of a calibration run. Mismatches are in vol points
/// (0.01 of vol); entry 0 is the starting guess.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub iterations: usize,
    pub max_mismatch_vol_points: Vec<f64>,
    pub tolerance_vol_points: f64,
    pub converged: bool,
    /// Set when the mismatch grew from one iteration to the next.
    pub oscillation: bool,
    pub objective: f64,
    pub outcome: CalibrationOutcome,
}

impl CalibrationReport {
    pub fn final_mismatch(&self) -> f64 {
        self.max_mismatch_vol_points.last().copied().unwrap_or(f64::NAN)
    }
}
