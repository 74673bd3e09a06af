use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use jumpcopula::basket::{merton_basket_calls, BasketSpec};
use jumpcopula::calibration::{
    calibrate_jump_tuple, diffusive_correlation_for_curves, diffusive_correlation_for_target,
    fixed_point_diffusive_vol, CalibrationReport, FixedPointConfig, NelderMeadConfig, SearchSpace, TupleConfig,
    TupleProblem,
};
use jumpcopula::copula::{implied_basket_vol_curve, merton_copula_basket, CopulaBasket, CopulaPrices, McConfig};
use jumpcopula::io::{load_bundle, DataError, MarketBundle, MaturityData, SkewTable};
use jumpcopula::{implied_vol, merton_call_extended, DiffusiveVolCurve, Error, JumpParams, VolSurfaceSlice};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    BasketMode, BundleArgs, CalibrateDiffusive, CalibrateTuple, FixedPointArgs, GridArgs, JumpArgs, McArgs,
    PriceBasket, PriceSingle, ReportCorrelation,
};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numeric(String),
    NotConverged(String),
}

impl Failure {
    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numeric(m) | Failure::NotConverged(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain(_) => Failure::Validation(msg),
            Error::NonConvergence { .. } | Error::InfeasibleCorrelation { .. } => Failure::NotConverged(msg),
            _ => Failure::Numeric(msg),
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Invalid(_) => Failure::Validation(e.to_string()),
            DataError::Write { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn write_output(path: &Path, text: &str) -> Outcome {
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Numeric(format!("cannot write to standard output: {e}")));
    }
    std::fs::write(path, text).map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", path.display())))
}

fn load(args: &BundleArgs) -> Result<(MarketBundle, usize), Failure> {
    let bundle = load_bundle(&args.bundle)?;
    let idx = match args.maturity {
        None => 0,
        Some(t) => bundle.maturities.iter().position(|m| (m.maturity - t).abs() <= 1e-9).ok_or_else(|| {
            invalid(format!("maturity {t} not in bundle {}; available: {:?}", bundle.name, bundle.maturity_list()))
        })?,
    };
    Ok((bundle, idx))
}

fn asset(bundle: &MarketBundle, id: &str) -> Result<usize, Failure> {
    bundle.asset_index(id).ok_or_else(|| {
        invalid(format!("unknown asset `{id}`; bundle {} has {}", bundle.name, bundle.asset_ids.join(", ")))
    })
}

fn jump_params(args: &JumpArgs, bundle: &MarketBundle) -> Result<JumpParams, Failure> {
    if args.no_jumps {
        return Ok(JumpParams::none());
    }
    let base = bundle.jump.unwrap_or_else(JumpParams::none);
    let jp = JumpParams {
        lambda: args.lambda.unwrap_or(base.lambda),
        k_hat: args.k_hat.unwrap_or(base.k_hat),
        delta: args.delta.unwrap_or(base.delta),
        sigma0: args.sigma0.unwrap_or(base.sigma0),
        kappa: args.kappa.unwrap_or(base.kappa),
    };
    jp.validate()?;
    Ok(jp)
}

fn fixed_point_config(args: &FixedPointArgs) -> Result<FixedPointConfig, Failure> {
    if !(args.tolerance_vol_points > 0.0) {
        return Err(invalid("--tolerance-vol-points must be positive"));
    }
    Ok(FixedPointConfig { tolerance: args.tolerance_vol_points / 100.0, max_iterations: args.max_iterations })
}

fn mc_config(args: &McArgs) -> Result<McConfig, Failure> {
    let seed = args.seed.ok_or_else(|| invalid("--seed is required for Monte Carlo pricing"))?;
    let mc = McConfig { n_paths: args.paths, seed, antithetic: !args.no_antithetic, batch_size: args.batch_size };
    mc.validate()?;
    Ok(mc)
}

fn moneyness_grid(args: &GridArgs) -> Result<Vec<f64>, Failure> {
    let (lo, hi, n) = (args.min_moneyness, args.max_moneyness, args.points);
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 || (n == 1 && hi != lo) {
        return Err(invalid("moneyness grid needs 0 < min <= max and at least one point (one only when min = max)"));
    }
    if !(1..=17).contains(&args.digits) {
        return Err(invalid("--digits must be between 1 and 17"));
    }
    Ok((0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn provenance(table: &mut SkewTable, bundle: &MarketBundle) {
    table.notes.push(format!("bundle {}", bundle.name));
    for (file, sum) in &bundle.checksums {
        table.notes.push(format!("sha256 {sum} {file}"));
    }
}

/// Diffusive curve per asset: flat when `sigma` is given, otherwise calibrated.
fn curves(
    mat: &MaturityData,
    jp: &JumpParams,
    sigma: Option<f64>,
    fp: &FixedPointConfig,
) -> Result<Vec<DiffusiveVolCurve>, Failure> {
    match sigma {
        Some(s) => Ok(vec![DiffusiveVolCurve::flat(s)?; mat.slices.len()]),
        None => Ok(mat
            .slices
            .par_iter()
            .map(|s| fixed_point_diffusive_vol(s, jp, fp).map(|(c, _)| c))
            .collect::<Result<Vec<_>, _>>()?),
    }
}

pub fn price_single(a: &PriceSingle) -> Outcome {
    let (bundle, m) = load(&a.bundle)?;
    let i = asset(&bundle, &a.asset)?;
    let jp = jump_params(&a.jump, &bundle)?;
    let fp = fixed_point_config(&a.fixed_point)?;
    let grid = moneyness_grid(&a.grid)?;
    let slice = &bundle.maturities[m].slices[i];
    let curve = match a.sigma {
        Some(s) => DiffusiveVolCurve::flat(s)?,
        None => fixed_point_diffusive_vol(slice, &jp, &fp)?.0,
    };
    let (f, t, df) = (slice.forward, slice.maturity, slice.discount);
    let strikes: Vec<f64> = grid.iter().map(|m| m * f).collect();
    let mut prices = Vec::new();
    let mut vols = Vec::new();
    for &k in &strikes {
        let p = merton_call_extended(f, t, k, &curve, df, &jp)?;
        vols.push(implied_vol(p, f, t, k, df).ok());
        prices.push(Some(p));
    }
    let mut table = SkewTable::new(grid);
    table.digits = a.grid.digits;
    provenance(&mut table, &bundle);
    table
        .push("strike", strikes.iter().map(|&k| Some(k)).collect())
        .push("call", prices)
        .push("implied_vol", vols)
        .push("market_vol", strikes.iter().map(|&k| Some(slice.market_vol(k))).collect())
        .push("diffusive_vol", strikes.iter().map(|&k| Some(curve.eval(k))).collect());
    write_output(&a.bundle.out, &table.render())
}

fn basket_vols(prices: &[f64], strikes: &[f64], fwd: f64, mat: &MaturityData) -> Result<Vec<Option<f64>>, Failure> {
    let curve = implied_basket_vol_curve(strikes, prices, fwd, mat.discount, mat.maturity)?;
    if !curve.omitted.is_empty() {
        warn!("basket prices outside arbitrage bounds at {} strike(s); implied vols left empty", curve.omitted.len());
    }
    Ok(curve.vols)
}

fn some(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| Some(x)).collect()
}

pub fn price_basket(a: &PriceBasket) -> Outcome {
    let (bundle, m) = load(&a.bundle)?;
    let mat = &bundle.maturities[m];
    let jp = jump_params(&a.jump, &bundle)?;
    let fp = fixed_point_config(&a.fixed_point)?;
    let grid = moneyness_grid(&a.grid)?;
    let mc = match a.mode {
        BasketMode::Copula => Some(mc_config(&a.mc)?),
        BasketMode::Tm => None,
    };
    let fwd = mat.basket_forward(&bundle.weights);
    if !(fwd > 0.0) {
        return Err(invalid(format!("basket forward {fwd} must be positive")));
    }
    let strikes: Vec<f64> = grid.iter().map(|m| m * fwd).collect();

    let none = JumpParams::none();
    let mut runs = Vec::new();
    for model in [&jp, &none] {
        let cs = curves(mat, model, a.sigma, &fp)?;
        let rho = diffusive_correlation_for_curves(&bundle.correlation, &mat.forwards, &cs, model)?;
        let priced = match mc {
            Some(mc) => {
                let basket = CopulaBasket {
                    asset_ids: bundle.asset_ids.clone(),
                    forwards: mat.forwards.clone(),
                    curves: cs,
                    weights: bundle.weights.clone(),
                    maturity: mat.maturity,
                    discount: mat.discount,
                };
                let p: CopulaPrices = merton_copula_basket(&basket, &strikes, &rho, model, &mc)?;
                if p.clamped > 0 {
                    warn!("{} quantile draws clamped to the marginal grid", p.clamped);
                }
                (p.prices, Some(p.std_errors))
            }
            None => {
                let vols = mat.forwards.iter().zip(&cs).map(|(&f, c)| c.eval(f)).collect();
                let spec = BasketSpec::new(
                    bundle.asset_ids.clone(),
                    bundle.weights.clone(),
                    mat.forwards.clone(),
                    vols,
                    rho,
                    mat.maturity,
                    mat.discount,
                )?;
                (merton_basket_calls(&spec, &strikes, model)?, None)
            }
        };
        runs.push(priced);
    }

    let mut table = SkewTable::new(grid);
    table.digits = a.grid.digits;
    provenance(&mut table, &bundle);
    table.push("strike", some(&strikes));
    for ((prices, errors), prefix) in runs.iter().zip(["", "baseline_"]) {
        table.push(format!("{prefix}price"), some(prices));
        table.push(format!("{prefix}implied_vol"), basket_vols(prices, &strikes, fwd, mat)?);
        if let Some(se) = errors {
            table.push(format!("{prefix}std_error"), some(se));
        }
    }
    if let Some(ix) = &mat.index {
        table.push("index_vol", strikes.iter().map(|&k| Some(ix.market_vol(k))).collect());
    }
    write_output(&a.bundle.out, &table.render())
}

#[derive(Serialize)]
struct CalibrationOutput<'a> {
    command: &'a str,
    bundle: &'a str,
    checksums: &'a BTreeMap<String, String>,
    maturity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    asset: Option<&'a str>,
    settings: serde_json::Value,
    report: &'a CalibrationReport,
}

fn write_report(out: &Path, o: &CalibrationOutput<'_>) -> Outcome {
    let mut text = serde_json::to_string_pretty(o).map_err(|e| Failure::Numeric(e.to_string()))?;
    text.push('\n');
    write_output(out, &text)
}

/// Writes the report of a calibration that ran to the end or stopped
/// without converging; other failures pass through.
fn finish(result: Result<CalibrationReport, Error>, emit: impl FnOnce(&CalibrationReport) -> Outcome) -> Outcome {
    match result {
        Ok(report) => {
            emit(&report)?;
            if report.converged {
                Ok(())
            } else {
                Err(Failure::NotConverged(format!(
                    "calibration stopped at mismatch {:.4} vol points (tolerance {})",
                    report.final_mismatch(),
                    report.tolerance_vol_points
                )))
            }
        }
        Err(Error::NonConvergence { report }) => {
            emit(&report)?;
            Err(Error::NonConvergence { report }.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn calibrate_diffusive(a: &CalibrateDiffusive) -> Outcome {
    let (bundle, m) = load(&a.bundle)?;
    let i = asset(&bundle, &a.asset)?;
    let jp = jump_params(&a.jump, &bundle)?;
    let fp = fixed_point_config(&a.fixed_point)?;
    let slice: &VolSurfaceSlice = &bundle.maturities[m].slices[i];
    let result = fixed_point_diffusive_vol(slice, &jp, &fp).map(|(_, r)| r);
    finish(result, |report| {
        write_report(
            &a.bundle.out,
            &CalibrationOutput {
                command: "calibrate-diffusive",
                bundle: &bundle.name,
                checksums: &bundle.checksums,
                maturity: slice.maturity,
                asset: Some(&a.asset),
                settings: serde_json::json!({ "jump": jp, "fixed_point": fp }),
                report,
            },
        )
    })
}

fn range(name: &str, v: &[f64]) -> Result<(f64, f64), Failure> {
    match v {
        [lo, hi] if lo <= hi => Ok((*lo, *hi)),
        _ => Err(invalid(format!("--{name} needs two ascending values `lo,hi`"))),
    }
}

pub fn calibrate_tuple(a: &CalibrateTuple) -> Outcome {
    let (bundle, m) = load(&a.bundle)?;
    let mat = &bundle.maturities[m];
    let index = mat
        .index
        .clone()
        .ok_or_else(|| invalid(format!("bundle {} has no index surface to calibrate to", bundle.name)))?;
    let seed = a.seed.ok_or_else(|| invalid("--seed is required for tuple calibration"))?;
    let bounds = [
        range("lambda-range", &a.lambda_range)?,
        range("k-hat-range", &a.k_hat_range)?,
        range("delta-range", &a.delta_range)?,
        range("kappa-range", &a.kappa_range)?,
    ];
    let space = SearchSpace { lower: bounds.map(|b| b.0), upper: bounds.map(|b| b.1) };
    let start = match &a.start {
        Some(v) => Some(<[f64; 4]>::try_from(v.as_slice()).map_err(|_| invalid("--start needs four values"))?),
        None => None,
    };
    let defaults = TupleConfig::default();
    let cfg = TupleConfig {
        sigma0: a.sigma0,
        mc: McConfig { n_paths: a.paths, seed, ..defaults.mc },
        optimizer: NelderMeadConfig { max_evaluations: a.max_evaluations, ..defaults.optimizer },
        restart_steps: a.restart_steps.clone(),
        start,
        tolerance_vol_points: a.tolerance_vol_points,
        ..defaults
    };
    let problem = TupleProblem {
        index,
        components: mat.slices.clone(),
        weights: bundle.weights.clone(),
        rho_total: bundle.correlation.clone(),
    };
    let result = calibrate_jump_tuple(&problem, &space, &cfg).map(|(_, r)| r);
    finish(result, |report| {
        write_report(
            &a.bundle.out,
            &CalibrationOutput {
                command: "calibrate-tuple",
                bundle: &bundle.name,
                checksums: &bundle.checksums,
                maturity: mat.maturity,
                asset: None,
                settings: serde_json::json!({ "search_space": space, "config": cfg }),
                report,
            },
        )
    })
}

pub fn report_correlation(a: &ReportCorrelation) -> Outcome {
    let (bundle, m) = load(&a.bundle)?;
    let mat = &bundle.maturities[m];
    let jp = jump_params(&a.jump, &bundle)?;
    let fp = fixed_point_config(&a.fixed_point)?;
    if a.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(invalid("--lambdas must be nonnegative"));
    }
    if !(1..=17).contains(&a.digits) {
        return Err(invalid("--digits must be between 1 and 17"));
    }
    let n = bundle.asset_ids.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut cols = vec![Vec::new(); pairs.len()];
    for &lambda in &a.lambdas {
        let trial = jp.with_lambda(lambda);
        // a failed component calibration leaves the whole row empty
        let x: Option<Vec<f64>> =
            curves(mat, &trial, None, &fp).map_err(|e| warn!("lambda {lambda}: {}", e.message())).ok().and_then(|cs| {
                mat.forwards
                    .iter()
                    .zip(&cs)
                    .map(|(&f, c)| trial.jump_for_vol(c.eval(f)).ok().map(|k| k / c.eval(f)))
                    .collect()
            });
        for (col, &(i, j)) in cols.iter_mut().zip(&pairs) {
            let v = x.as_ref().and_then(|x| {
                diffusive_correlation_for_target(bundle.correlation[(i, j)], lambda, x[i], x[j])
                    .map_err(|e| warn!("lambda {lambda}, {}:{}: {e}", bundle.asset_ids[i], bundle.asset_ids[j]))
                    .ok()
            });
            col.push(v);
        }
    }
    let mut table = SkewTable::keyed("lambda", a.lambdas.clone());
    table.digits = a.digits;
    provenance(&mut table, &bundle);
    for (col, &(i, j)) in cols.into_iter().zip(&pairs) {
        table.push(format!("{}:{}", bundle.asset_ids[i], bundle.asset_ids[j]), col);
    }
    write_output(&a.bundle.out, &table.render())
}
