//! Diffusive versus total correlation under one shared jump.
//!
//! With per-unit-time covariance `rho sigma_i sigma_j + lambda k_i k_j`, the
//! total correlation is `(rho + lambda x_i x_j) / sqrt((1 + lambda x_i^2)(1 + lambda x_j^2))`
//! where `x = k / sigma`. Callers with unit diffusive vols pass the raw jump
//! sizes; basket bookkeeping passes jumps divided by the asset's diffusive vol.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

fn check(lambda: f64, x_i: f64, x_j: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(domain(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(x_i.is_finite() && x_j.is_finite()) {
        return Err(domain("jump sizes must be finite"));
    }
    Ok(())
}

/// Total correlation implied by a diffusive correlation and a shared jump.
pub fn total_correlation(rho_diffusive: f64, lambda: f64, x_i: f64, x_j: f64) -> Result<f64> {
    check(lambda, x_i, x_j)?;
    if !(-1.0..=1.0).contains(&rho_diffusive) {
        return Err(domain(format!("diffusive correlation {rho_diffusive} outside [-1, 1]")));
    }
    let num = rho_diffusive + lambda * x_i * x_j;
    let den = ((1.0 + lambda * x_i * x_i) * (1.0 + lambda * x_j * x_j)).sqrt();
    Ok((num / den).clamp(-1.0, 1.0))
}

fn required(target: f64, lambda: f64, x_i: f64, x_j: f64) -> f64 {
    target * ((1.0 + lambda * x_i * x_i) * (1.0 + lambda * x_j * x_j)).sqrt() - lambda * x_i * x_j
}

/// Largest intensity for which the target total correlation stays reachable
/// from some diffusive correlation in [-1, 1]; `inf` if every intensity is.
pub fn feasible_lambda_max(target: f64, x_i: f64, x_j: f64) -> f64 {
    let ok = |l: f64| required(target, l, x_i, x_j).abs() <= 1.0 + 1e-12;
    if !ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while ok(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    lo
}

/// Diffusive correlation that reproduces `target` total correlation.
pub fn diffusive_correlation_for_target(target: f64, lambda: f64, x_i: f64, x_j: f64) -> Result<f64> {
    check(lambda, x_i, x_j)?;
    if !(-1.0..=1.0).contains(&target) {
        return Err(domain(format!("target correlation {target} outside [-1, 1]")));
    }
    let rho = required(target, lambda, x_i, x_j);
    if rho.abs() > 1.0 + 1e-12 {
        return Err(Error::InfeasibleCorrelation { required: rho, lambda_max: feasible_lambda_max(target, x_i, x_j) });
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// Elementwise [`total_correlation`] with unit diagonal.
pub fn total_correlation_matrix(rho_diffusive: &DMatrix<f64>, lambda: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    if rho_diffusive.nrows() != n || rho_diffusive.ncols() != n {
        return Err(domain("correlation and jump vectors differ in size"));
    }
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = total_correlation(rho_diffusive[(i, j)], lambda, x[i], x[j])?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Elementwise [`diffusive_correlation_for_target`]; the first infeasible
/// pair aborts with its feasible intensity range.
pub fn diffusive_correlation_matrix(rho_total: &DMatrix<f64>, lambda: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    if rho_total.nrows() != n || rho_total.ncols() != n {
        return Err(domain("correlation and jump vectors differ in size"));
    }
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = diffusive_correlation_for_target(rho_total[(i, j)], lambda, x[i], x[j])?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_jumps_is_identity() {
        assert_eq!(total_correlation(0.37, 0.0, -0.2, -0.1).unwrap(), 0.37);
        assert_eq!(diffusive_correlation_for_target(0.37, 0.0, -0.2, -0.1).unwrap(), 0.37);
    }

    #[test]
    fn frequent_jumps_drive_correlation_to_one() {
        let r = total_correlation(0.0, 1e8, -0.16, -0.16).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reference_value() {
        // (0.5 + 0.25 * 0.0256) / (1 + 0.25 * 0.0256)
        let r = total_correlation(0.5, 0.25, -0.16, -0.16).unwrap();
        assert!((r - 0.503_179_650_238_473_8).abs() < 1e-15);
    }

    #[test]
    fn algebraic_inversion() {
        // 0.6 (1 + 0.35 * 0.0256) - 0.35 * 0.0256
        let r = diffusive_correlation_for_target(0.6, 0.35, -0.16, -0.16).unwrap();
        assert!((r - 0.596_416).abs() < 1e-14);
        assert!((total_correlation(r, 0.35, -0.16, -0.16).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn infeasible_reports_lambda_range() {
        match diffusive_correlation_for_target(0.99, 1000.0, -0.9, -0.9) {
            Err(Error::InfeasibleCorrelation { required, lambda_max }) => {
                assert!(required < -1.0);
                // rho = 0.99 - lambda x^2 (0.01) hits -1 at lambda = 1.99 / (0.01 * 0.81)
                assert!((lambda_max - 1.99 / (0.01 * 0.81)).abs() < 1e-6 * lambda_max);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn total_in_unit_interval(rho in -1.0..=1.0f64, lambda in 0.0..50.0f64,
                                  xi in -3.0..3.0f64, xj in -3.0..3.0f64) {
            let r = total_correlation(rho, lambda, xi, xj).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
        }

        #[test]
        fn inversion_round_trip(rho in -0.95..0.95f64, lambda in 0.0..2.0f64,
                                xi in -1.0..0.0f64, xj in -1.0..0.0f64) {
            let total = total_correlation(rho, lambda, xi, xj).unwrap();
            let back = diffusive_correlation_for_target(total, lambda, xi, xj).unwrap();
            prop_assert!((back - rho).abs() < 1e-12);
            let again = total_correlation(back, lambda, xi, xj).unwrap();
            prop_assert!((again - total).abs() < 1e-12);
        }
    }
}
