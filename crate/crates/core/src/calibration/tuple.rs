use log::{debug, info};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::correlation::{diffusive_correlation_matrix, feasible_lambda_max};
use super::fixed_point::{fixed_point_diffusive_vol, FixedPointConfig};
use super::nelder_mead::{minimize_in_box, NelderMeadConfig};
use super::{CalibrationOutcome, CalibrationReport};
use crate::copula::{implied_basket_vol_curve, merton_copula_basket, CopulaBasket, McConfig};
use crate::curve::DiffusiveVolCurve;
use crate::error::{domain, Error, Result};
use crate::jump::JumpParams;
use crate::linalg::check_correlation;
use crate::surface::VolSurfaceSlice;

/// Squared vol error charged for a strike whose model price has no implied vol.
const OMITTED_STRIKE_PENALTY: f64 = 1.0;

/// Box bounds for `(lambda, k_hat, delta, kappa)`. A dimension whose bounds
/// coincide is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSpace {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self { lower: [0.02, -0.4, 0.0, 0.0], upper: [1.0, -0.02, 0.4, 2.0] }
    }
}

impl SearchSpace {
    pub fn point(p: [f64; 4]) -> Self {
        Self { lower: p, upper: p }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(domain(format!("search bound {i} is not an ordered finite interval: [{lo}, {hi}]")));
            }
        }
        if self.lower[0] < 0.0 || self.lower[2] < 0.0 {
            return Err(domain("lambda and delta bounds must be nonnegative"));
        }
        if self.upper[1] <= -1.0 {
            return Err(domain("k_hat bounds must lie above -1"));
        }
        Ok(())
    }

    fn free_dims(&self) -> Vec<usize> {
        (0..4).filter(|&i| self.upper[i] > self.lower[i]).collect()
    }

    fn unit_coords(&self, p: &[f64; 4], dims: &[usize]) -> Vec<f64> {
        dims.iter().map(|&i| ((p[i] - self.lower[i]) / (self.upper[i] - self.lower[i])).clamp(0.0, 1.0)).collect()
    }

    fn point_at(&self, u: &[f64], dims: &[usize]) -> [f64; 4] {
        let mut p = self.lower;
        for (&i, &x) in dims.iter().zip(u) {
            p[i] = self.lower[i] + x * (self.upper[i] - self.lower[i]);
        }
        p
    }

    fn center(&self) -> [f64; 4] {
        std::array::from_fn(|i| 0.5 * (self.lower[i] + self.upper[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TupleConfig {
    pub sigma0: f64,
    pub mc: McConfig,
    /// Per-trial component calibration; tight so the objective stays smooth.
    pub fixed_point: FixedPointConfig,
    pub optimizer: NelderMeadConfig,
    /// Initial simplex edge of each restart; its length is the restart count.
    pub restart_steps: Vec<f64>,
    /// Starting tuple; the box center when absent.
    pub start: Option<[f64; 4]>,
    /// Fit accepted as converged when the worst strike misses by at most this.
    pub tolerance_vol_points: f64,
}

impl Default for TupleConfig {
    fn default() -> Self {
        Self {
            sigma0: 0.18,
            mc: McConfig::new(20_000, 7),
            fixed_point: FixedPointConfig { tolerance: 1e-7, max_iterations: 60 },
            optimizer: NelderMeadConfig {
                initial_step: 0.25,
                x_tolerance: 1e-3,
                f_tolerance: 1e-12,
                max_evaluations: 200,
            },
            restart_steps: vec![0.25, 0.1, 0.05],
            start: None,
            tolerance_vol_points: 0.25,
        }
    }
}

/// Index and component markets at one maturity.
#[derive(Debug, Clone)]
pub struct TupleProblem {
    pub index: VolSurfaceSlice,
    pub components: Vec<VolSurfaceSlice>,
    pub weights: Vec<f64>,
    /// Total (jump-inclusive) correlation, held fixed across trial tuples.
    pub rho_total: DMatrix<f64>,
}

impl TupleProblem {
    pub fn validate(&self) -> Result<()> {
        self.index.validate()?;
        let n = self.components.len();
        if n == 0 || self.weights.len() != n {
            return Err(domain("weights must match the nonempty component list"));
        }
        if self.rho_total.nrows() != n || self.rho_total.ncols() != n {
            return Err(domain("total correlation must be n x n for n components"));
        }
        check_correlation(&self.rho_total)?;
        for c in &self.components {
            c.validate()?;
            if (c.maturity - self.index.maturity).abs() > 1e-12 {
                return Err(domain(format!("component {} maturity {} differs from the index", c.asset_id, c.maturity)));
            }
        }
        let fwd: f64 = self.weights.iter().zip(&self.components).map(|(w, c)| w * c.forward).sum();
        if (fwd - self.index.forward).abs() > 1e-6 * self.index.forward {
            return Err(domain(format!(
                "index forward {} differs from the weighted component forward {fwd}",
                self.index.forward
            )));
        }
        Ok(())
    }
}

/// Diffusive correlation that holds `rho_total` under `jp` for assets with
/// the given diffusive curves. Jump sizes enter relative to each asset's ATM
/// diffusive vol.
pub fn diffusive_correlation_for_curves(
    rho_total: &DMatrix<f64>,
    forwards: &[f64],
    curves: &[DiffusiveVolCurve],
    jp: &JumpParams,
) -> Result<DMatrix<f64>> {
    let x = forwards
        .iter()
        .zip(curves)
        .map(|(&f, c)| {
            let sigma = c.eval(f);
            Ok(jp.jump_for_vol(sigma)? / sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    diffusive_correlation_matrix(rho_total, jp.lambda, &x)
}

/// Model basket implied vols at the index strikes for a given tuple: each
/// component is recalibrated under `jp`, the diffusive correlation is
/// rederived from the total one, and the copula basket is priced.
pub fn basket_model_vols(problem: &TupleProblem, jp: &JumpParams, cfg: &TupleConfig) -> Result<Vec<Option<f64>>> {
    let curves = problem
        .components
        .par_iter()
        .map(|c| fixed_point_diffusive_vol(c, jp, &cfg.fixed_point).map(|(curve, _)| curve))
        .collect::<Result<Vec<_>>>()?;
    let forwards: Vec<f64> = problem.components.iter().map(|c| c.forward).collect();
    let rho = diffusive_correlation_for_curves(&problem.rho_total, &forwards, &curves, jp)?;
    let basket = CopulaBasket {
        asset_ids: problem.components.iter().map(|c| c.asset_id.clone()).collect(),
        forwards,
        curves,
        weights: problem.weights.clone(),
        maturity: problem.index.maturity,
        discount: problem.index.discount,
    };
    let prices = merton_copula_basket(&basket, &problem.index.strikes, &rho, jp, &cfg.mc)?;
    let implied = implied_basket_vol_curve(
        &problem.index.strikes,
        &prices.prices,
        basket.basket_forward(),
        basket.discount,
        basket.maturity,
    )?;
    Ok(implied.vols)
}

struct Trial {
    objective: f64,
    max_mismatch: f64,
}

fn score(problem: &TupleProblem, model: &[Option<f64>]) -> Trial {
    let mut objective = 0.0;
    let mut max_mismatch = 0.0f64;
    for (m, v) in model.iter().zip(&problem.index.vols) {
        match m {
            Some(m) => {
                objective += (m - v).powi(2);
                max_mismatch = max_mismatch.max((m - v).abs());
            }
            None => {
                objective += OMITTED_STRIKE_PENALTY;
                max_mismatch = f64::INFINITY;
            }
        }
    }
    Trial { objective, max_mismatch }
}

fn params(p: &[f64; 4], sigma0: f64) -> Result<JumpParams> {
    JumpParams::new(p[0], p[1], p[2], sigma0, p[3])
}

fn evaluate(problem: &TupleProblem, p: &[f64; 4], cfg: &TupleConfig) -> Result<Trial> {
    let jp = params(p, cfg.sigma0)?;
    let model = basket_model_vols(problem, &jp, cfg)?;
    Ok(score(problem, &model))
}

/// Rejects a search whose smallest intensity already puts the total
/// correlation out of reach, reporting the feasible intensity range. Market
/// ATM vols stand in for the not yet calibrated diffusive vols; with
/// `kappa = 1` the jump-to-vol ratio does not depend on them.
fn check_reachable(problem: &TupleProblem, space: &SearchSpace, start: &[f64; 4], sigma0: f64) -> Result<()> {
    let jp = params(&[space.lower[0], start[1], start[2], start[3]], sigma0)?;
    let x = problem
        .components
        .iter()
        .map(|c| {
            let s = c.atm_vol();
            Ok(jp.jump_for_vol(s)? / s)
        })
        .collect::<Result<Vec<f64>>>()?;
    match diffusive_correlation_matrix(&problem.rho_total, jp.lambda, &x) {
        Err(Error::InfeasibleCorrelation { required, .. }) => {
            let n = x.len();
            let lambda_max = (0..n)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| feasible_lambda_max(problem.rho_total[(i, j)], x[i], x[j]))
                .fold(f64::INFINITY, f64::min);
            Err(Error::InfeasibleCorrelation { required, lambda_max })
        }
        other => other.map(|_| ()),
    }
}

/// Evaluates the starting tuple, backing its intensity off toward the lower
/// bound while the components cannot absorb it.
fn feasible_start(
    problem: &TupleProblem,
    space: &SearchSpace,
    start: [f64; 4],
    cfg: &TupleConfig,
) -> Result<([f64; 4], Trial)> {
    let mut last_err = None;
    for frac in [0.0, 0.5, 0.75, 0.9, 1.0] {
        let mut p = start;
        p[0] = start[0] + frac * (space.lower[0] - start[0]);
        match evaluate(problem, &p, cfg) {
            Ok(t) if t.objective.is_finite() => return Ok((p, t)),
            Ok(_) => {}
            Err(e) => {
                debug!("start {p:?} rejected: {e}");
                last_err = Some(e);
            }
        }
        if space.lower[0] == start[0] {
            break;
        }
    }
    Err(last_err.unwrap_or_else(|| domain("no starting tuple yields a finite objective")))
}

/// Fits `(lambda, k_hat, delta, kappa)` so the copula basket reproduces the
/// index skew, with components recalibrated and total correlation held fixed
/// at every trial.
///
/// Trial tuples that the components cannot absorb (negative diffusive vol,
/// infeasible correlation) score `+inf`. An infeasible start is retried with
/// smaller intensities and is an error only if none of them works. Restarts
/// begin from the best tuple found so far with a smaller simplex. Exhausting
/// the evaluation budget returns the best tuple with `converged = false`.
pub fn calibrate_jump_tuple(
    problem: &TupleProblem,
    space: &SearchSpace,
    cfg: &TupleConfig,
) -> Result<(JumpParams, CalibrationReport)> {
    problem.validate()?;
    space.validate()?;
    cfg.mc.validate()?;
    if cfg.restart_steps.is_empty() {
        return Err(domain("at least one optimizer start is required"));
    }
    let dims = space.free_dims();
    let start = cfg.start.unwrap_or_else(|| space.center());
    let start = space.point_at(&space.unit_coords(&start, &dims), &dims);

    check_reachable(problem, space, &start, cfg.sigma0)?;
    let (start, first) = feasible_start(problem, space, start, cfg)?;
    info!("tuple start {start:?}: objective {:.3e}", first.objective);
    let mut best = (start, first.objective, first.max_mismatch);
    let mut mismatches = vec![100.0 * first.max_mismatch];
    let mut restart_objectives = Vec::new();
    let mut iterations = 0;
    let mut evaluations = 1;
    let mut optimizer_converged = dims.is_empty();

    if !dims.is_empty() {
        for (r, &step) in cfg.restart_steps.iter().enumerate() {
            let opt = NelderMeadConfig { initial_step: step, ..cfg.optimizer };
            let objective = |u: &[f64]| {
                let p = space.point_at(u, &dims);
                match evaluate(problem, &p, cfg) {
                    Ok(t) => {
                        debug!("trial {p:?}: objective {:.3e}", t.objective);
                        t.objective
                    }
                    Err(e) => {
                        debug!("trial {p:?} rejected: {e}");
                        f64::INFINITY
                    }
                }
            };
            let res = minimize_in_box(objective, &space.unit_coords(&best.0, &dims), &opt);
            iterations += res.iterations;
            evaluations += res.evaluations;
            optimizer_converged = res.converged;
            if res.value < best.1 {
                let p = space.point_at(&res.x, &dims);
                // rescoring the winner keeps its max mismatch; cheap next to the search
                let t = evaluate(problem, &p, cfg)?;
                evaluations += 1;
                best = (p, t.objective, t.max_mismatch);
            }
            info!("restart {r}: best {:?} objective {:.3e}", best.0, best.1);
            mismatches.push(100.0 * best.2);
            restart_objectives.push(best.1);
        }
    }

    let jp = params(&best.0, cfg.sigma0)?;
    let final_mismatch = 100.0 * best.2;
    let report = CalibrationReport {
        iterations,
        max_mismatch_vol_points: mismatches,
        tolerance_vol_points: cfg.tolerance_vol_points,
        converged: optimizer_converged && final_mismatch <= cfg.tolerance_vol_points,
        oscillation: false,
        objective: best.1,
        outcome: CalibrationOutcome::JumpTuple { params: jp, restart_objectives, evaluations },
    };
    if !report.objective.is_finite() {
        return Err(Error::NonConvergence { report: Box::new(report) });
    }
    Ok((jp, report))
}
