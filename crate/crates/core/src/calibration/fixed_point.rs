use log::debug;
use serde::Serialize;

use super::{CalibrationOutcome, CalibrationReport};
use crate::black_scholes::implied_vol;
use crate::curve::DiffusiveVolCurve;
use crate::error::{domain, Error, Result};
use crate::jump::JumpParams;
use crate::merton::mixture_for_curve;
use crate::surface::VolSurfaceSlice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointConfig {
    /// Largest accepted vol mismatch, in vol units (0.0005 = 0.05 vol points).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tolerance: 5e-4, max_iterations: 20 }
    }
}

/// Solves for `sigma(K_j)` at the quoted strikes so that the extended Merton
/// model reprices every quote.
///
/// Starts from the flat at-the-money market vol and adds, at each node, the
/// gap between market and model implied vol.
pub fn fixed_point_diffusive_vol(
    slice: &VolSurfaceSlice,
    jp: &JumpParams,
    cfg: &FixedPointConfig,
) -> Result<(DiffusiveVolCurve, CalibrationReport)> {
    slice.validate()?;
    jp.validate()?;
    if !(cfg.tolerance > 0.0) {
        return Err(domain("fixed-point tolerance must be positive"));
    }
    let strikes = slice.strikes.clone();
    let mut sigma = vec![slice.atm_vol(); strikes.len()];
    let mut mismatches = Vec::new();
    let mut oscillation = false;

    for iteration in 0..=cfg.max_iterations {
        let curve = DiffusiveVolCurve::new(strikes.clone(), sigma.clone())?;
        let mix = mixture_for_curve(slice.forward, slice.maturity, &curve, slice.discount, jp)?;
        let mut gaps = Vec::with_capacity(strikes.len());
        for (j, &k) in strikes.iter().enumerate() {
            let price = mix.call(k, sigma[j]);
            let model = implied_vol(price, slice.forward, slice.maturity, k, slice.discount).inspect_err(|e| {
                debug!("{}: model vol at strike {k} not invertible in iteration {iteration}: {e}", slice.asset_id)
            })?;
            gaps.push(slice.vols[j] - model);
        }
        let worst = gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if let Some(&prev) = mismatches.last() {
            if 100.0 * worst > prev {
                oscillation = true;
            }
        }
        mismatches.push(100.0 * worst);

        let report = |converged: bool| CalibrationReport {
            iterations: iteration,
            max_mismatch_vol_points: mismatches.clone(),
            tolerance_vol_points: 100.0 * cfg.tolerance,
            converged,
            oscillation,
            objective: gaps.iter().map(|g| g * g).sum(),
            outcome: CalibrationOutcome::DiffusiveCurve {
                asset_id: slice.asset_id.clone(),
                strikes: strikes.clone(),
                vols: sigma.clone(),
            },
        };
        if worst <= cfg.tolerance {
            return Ok((curve, report(true)));
        }
        if iteration == cfg.max_iterations {
            return Err(Error::NonConvergence { report: Box::new(report(false)) });
        }
        for (j, g) in gaps.iter().enumerate() {
            sigma[j] += g;
            if sigma[j] <= 0.0 {
                return Err(Error::NegativeVol { strike: strikes[j], iteration: iteration + 1, value: sigma[j] });
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}
