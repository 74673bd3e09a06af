//! Correlation-matrix utilities: validation, PSD repair and a Cholesky
//! factorization that tolerates semidefinite input.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};

/// Tolerance on negative eigenvalues accepted without repair.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Checks shape, finiteness, unit diagonal, symmetry and entries in [-1, 1].
pub fn check_correlation(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(domain(format!("correlation matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    for i in 0..n {
        if (m[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(domain(format!("correlation diagonal entry {i} is {}", m[(i, i)])));
        }
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(domain(format!("correlation entry ({i},{j}) = {v} outside [-1, 1]")));
            }
            if (v - m[(j, i)]).abs() > 1e-12 {
                return Err(domain(format!("correlation matrix not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Nearest-correlation repair: clip eigenvalues at zero, rebuild, rescale to a
/// unit diagonal. Matrices already PSD within [`PSD_TOLERANCE`] are returned
/// unchanged.
pub fn repair_correlation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_correlation(m)?;
    if min_eigenvalue(m) >= -PSD_TOLERANCE {
        return Ok(m.clone());
    }
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let n = m.nrows();
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut out = DMatrix::from_fn(n, n, |i, j| rebuilt[(i, j)] / (scale[i] * scale[j]));
    for i in 0..n {
        out[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v.clamp(-1.0, 1.0);
            out[(j, i)] = v.clamp(-1.0, 1.0);
        }
    }
    Ok(out)
}

/// Lower Cholesky factor `L` with `L L^T = m`. Zero pivots (within a
/// tolerance scaled to the diagonal) are accepted and their column zeroed, so
/// perfectly correlated assets factor cleanly.
pub fn cholesky_semidefinite(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        let tol = 1e-10 * m[(j, j)].abs().max(1.0);
        if d < -tol {
            return Err(Error::Cholesky { row: j, pivot: d });
        }
        if d <= tol {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    Ok(l)
}

/// Constant off-diagonal correlation matrix.
pub fn flat_correlation(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho })
}
