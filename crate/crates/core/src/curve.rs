//! Strike-dependent diffusive vol curves.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Shape-preserving piecewise cubic Hermite (Fritsch-Butland slopes).
    MonotoneCubic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    Flat,
}

/// Piecewise cubic Hermite interpolant through `(x, y)` with monotone-preserving
/// node slopes and zero slope at both ends, so that a flat continuation is C1.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(domain("interpolant needs equally many, and at least one, x and y values"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(domain("interpolant nodes must be finite and strictly ascending"));
        }
        let n = x.len();
        let mut slopes = vec![0.0; n];
        for i in 1..n.saturating_sub(1) {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let d0 = (y[i] - y[i - 1]) / h0;
            let d1 = (y[i + 1] - y[i]) / h1;
            if d0 * d1 > 0.0 {
                slopes[i] = 3.0 * (h0 + h1) / ((2.0 * h1 + h0) / d0 + (h1 + 2.0 * h0) / d1);
            }
        }
        Ok(Self { x, y, slopes })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Diffusive vol as a function of strike, `sigma(K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveVolCurve {
    interp: MonotoneCubic,
    rule: Interpolation,
    extrapolation: Extrapolation,
}

impl DiffusiveVolCurve {
    pub fn new(strikes: Vec<f64>, vols: Vec<f64>) -> Result<Self> {
        Self::with_rule(strikes, vols, Interpolation::MonotoneCubic)
    }

    pub fn with_rule(strikes: Vec<f64>, vols: Vec<f64>, rule: Interpolation) -> Result<Self> {
        if strikes.iter().any(|&k| !(k > 0.0)) {
            return Err(domain("curve strikes must be positive"));
        }
        if let Some(v) = vols.iter().find(|&&v| !(v > 0.0)) {
            return Err(domain(format!("curve vols must be positive, got {v}")));
        }
        Ok(Self { interp: MonotoneCubic::new(strikes, vols)?, rule, extrapolation: Extrapolation::Flat })
    }

    /// Strike-independent curve.
    pub fn flat(vol: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vol])
    }

    pub fn strikes(&self) -> &[f64] {
        self.interp.x()
    }

    pub fn vols(&self) -> &[f64] {
        self.interp.y()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.rule
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn is_flat(&self) -> bool {
        self.vols().windows(2).all(|w| w[0] == w[1])
    }

    /// True when `strike` lies outside the node range and the flat rule applies.
    pub fn extrapolates(&self, strike: f64) -> bool {
        let k = self.strikes();
        k.len() > 1 && (strike < k[0] || strike > k[k.len() - 1])
    }

    pub fn max_vol(&self) -> f64 {
        self.vols().iter().copied().fold(0.0, f64::max)
    }

    pub fn eval(&self, strike: f64) -> f64 {
        match self.rule {
            Interpolation::MonotoneCubic => self.interp.eval(strike),
            Interpolation::Linear => {
                let (x, y) = (self.interp.x(), self.interp.y());
                let n = x.len();
                if strike <= x[0] {
                    return y[0];
                }
                if strike >= x[n - 1] {
                    return y[n - 1];
                }
                let i = x.partition_point(|&v| v <= strike) - 1;
                let w = (strike - x[i]) / (x[i + 1] - x[i]);
                y[i] + w * (y[i + 1] - y[i])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates_nodes_and_extrapolates_flat() {
        let c = DiffusiveVolCurve::new(vec![80.0, 100.0, 120.0], vec![0.3, 0.2, 0.18]).unwrap();
        assert_eq!(c.eval(80.0), 0.3);
        assert_eq!(c.eval(100.0), 0.2);
        assert_eq!(c.eval(50.0), 0.3);
        assert_eq!(c.eval(500.0), 0.18);
        assert!(c.extrapolates(50.0) && !c.extrapolates(90.0));
    }

    #[test]
    fn flat_curve() {
        let c = DiffusiveVolCurve::flat(0.2).unwrap();
        assert_eq!(c.eval(1e-3), 0.2);
        assert_eq!(c.eval(1e6), 0.2);
        assert!(!c.extrapolates(1e6));
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(DiffusiveVolCurve::new(vec![1.0, 1.0], vec![0.2, 0.2]).is_err());
        assert!(DiffusiveVolCurve::new(vec![1.0, 2.0], vec![0.2, -0.1]).is_err());
        assert!(DiffusiveVolCurve::new(vec![], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_curve(steps in proptest::collection::vec(0.0..0.05f64, 2..12)) {
            let x: Vec<f64> = (0..=steps.len()).map(|i| 50.0 + 10.0 * i as f64).collect();
            let mut y = vec![0.5];
            for s in &steps { y.push(y.last().unwrap() - s); }
            prop_assume!(y.iter().all(|&v| v > 0.0));
            let c = DiffusiveVolCurve::new(x.clone(), y).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..=400 {
                let k = 45.0 + i as f64 * (x.last().unwrap() - 40.0) / 400.0;
                let v = c.eval(k);
                prop_assert!(v <= prev + 1e-14);
                prev = v;
            }
        }

        #[test]
        fn continuous(k in 40.0..140.0f64) {
            let c = DiffusiveVolCurve::new(vec![60.0, 80.0, 100.0, 120.0], vec![0.35, 0.26, 0.2, 0.19]).unwrap();
            prop_assert!((c.eval(k + 1e-9) - c.eval(k)).abs() < 1e-9);
        }
    }
}
