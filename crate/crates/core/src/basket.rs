//! Analytic basket pricing: exact joint-lognormal moments matched to a
//! shifted lognormal, and the Poisson mixture of such prices under a shared
//! jump.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::black_scholes::{call_unchecked, check_inputs};
use crate::error::{domain, Error, Result};
use crate::jump::{JumpParams, PoissonWeights};
use crate::linalg::repair_correlation;

/// Assets, fixed weights, forwards, diffusive vols and their correlation at
/// one maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct BasketSpec {
    pub asset_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub forwards: Vec<f64>,
    pub vols: Vec<f64>,
    pub correlation: DMatrix<f64>,
    pub maturity: f64,
    pub discount: f64,
}

impl BasketSpec {
    /// Validates the inputs and repairs the correlation matrix to PSD.
    pub fn new(
        asset_ids: Vec<String>,
        weights: Vec<f64>,
        forwards: Vec<f64>,
        vols: Vec<f64>,
        correlation: DMatrix<f64>,
        maturity: f64,
        discount: f64,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 || asset_ids.len() != n || forwards.len() != n || vols.len() != n {
            return Err(domain("basket ids, weights, forwards and vols must be nonempty and equally long"));
        }
        if correlation.nrows() != n || correlation.ncols() != n {
            return Err(domain(format!("basket correlation must be {n}x{n}")));
        }
        if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|&w| w == 0.0) {
            return Err(domain("basket weights must be finite and not all zero"));
        }
        for i in 0..n {
            check_inputs(forwards[i], maturity, forwards[i], vols[i], discount)?;
        }
        let correlation = repair_correlation(&correlation)?;
        Ok(Self { asset_ids, weights, forwards, vols, correlation, maturity, discount })
    }

    /// Single-asset basket with unit weight.
    pub fn single(forward: f64, vol: f64, maturity: f64, discount: f64) -> Result<Self> {
        Self::new(
            vec!["asset".into()],
            vec![1.0],
            vec![forward],
            vec![vol],
            DMatrix::from_element(1, 1, 1.0),
            maturity,
            discount,
        )
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `E[B] = sum alpha_i F_i`.
    pub fn basket_forward(&self) -> f64 {
        self.weights.iter().zip(&self.forwards).map(|(a, f)| a * f).sum()
    }

    fn with_state(&self, forwards: Vec<f64>, vols: Vec<f64>) -> Self {
        Self { forwards, vols, ..self.clone() }
    }
}

/// Mean and second/third central moments of the basket at maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasketMoments {
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
}

impl BasketMoments {
    pub fn skewness(&self) -> f64 {
        self.third_central / self.variance.powf(1.5)
    }

    /// Raw moments `E[B], E[B^2], E[B^3]`.
    pub fn raw(&self) -> [f64; 3] {
        let m = self.mean;
        [m, self.variance + m * m, self.third_central + 3.0 * m * self.variance + m * m * m]
    }
}

/// Exact moments of a weighted sum of correlated lognormals. Central moments
/// are accumulated directly (through `expm1`) to avoid cancellation at low vol.
pub fn basket_moments(spec: &BasketSpec) -> BasketMoments {
    let n = spec.len();
    let t = spec.maturity;
    let a: Vec<f64> = spec.weights.iter().zip(&spec.forwards).map(|(w, f)| w * f).collect();
    let cov = DMatrix::from_fn(n, n, |i, j| spec.correlation[(i, j)] * spec.vols[i] * spec.vols[j] * t);
    let em1 = cov.map(f64::exp_m1);
    let mean = a.iter().sum();
    let mut variance = 0.0;
    let mut third = 0.0;
    for i in 0..n {
        for j in 0..n {
            let aij = a[i] * a[j];
            variance += aij * em1[(i, j)];
            for k in 0..n {
                let s = cov[(i, j)] + cov[(i, k)] + cov[(j, k)];
                third += aij * a[k] * (s.exp_m1() - em1[(i, j)] - em1[(i, k)] - em1[(j, k)]);
            }
        }
    }
    BasketMoments { mean, variance, third_central: third }
}

/// `B ~ shift + X` with `X` lognormal of mean `forward` and total log-stddev
/// `stddev`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedLognormal {
    pub shift: f64,
    pub forward: f64,
    pub stddev: f64,
    /// Third moment could not be matched; plain lognormal on two moments.
    pub two_moment: bool,
}

impl ShiftedLognormal {
    /// Matches mean, variance and skewness in closed form.
    pub fn fit(m: &BasketMoments) -> Result<Self> {
        if !(m.mean.is_finite() && m.variance.is_finite() && m.third_central.is_finite()) {
            return Err(Error::MomentFit("non-finite moments".into()));
        }
        if m.variance <= 1e-28 * m.mean * m.mean {
            return Ok(Self { shift: m.mean, forward: 0.0, stddev: 0.0, two_moment: false });
        }
        let skew = m.skewness();
        if skew <= 1e-12 {
            if m.mean <= 0.0 {
                return Err(Error::MomentFit(format!(
                    "skewness {skew:.3e} <= 0 and mean {} <= 0: no lognormal fallback",
                    m.mean
                )));
            }
            let w = 1.0 + m.variance / (m.mean * m.mean);
            return Ok(Self { shift: 0.0, forward: m.mean, stddev: w.ln().sqrt(), two_moment: true });
        }
        // lognormal skewness (w + 2) sqrt(w - 1) with y = sqrt(w - 1): y^3 + 3y = skew
        let root = (skew * skew + 4.0).sqrt();
        let a = (0.5 * (skew + root)).cbrt();
        let mut y = a - 1.0 / a;
        for _ in 0..3 {
            y -= (y * y * y + 3.0 * y - skew) / (3.0 * y * y + 3.0);
        }
        let stddev = (y * y).ln_1p().sqrt();
        let forward = m.variance.sqrt() / y;
        Ok(Self { shift: m.mean - forward, forward, stddev, two_moment: false })
    }

    /// Discounted call on the fitted variable.
    pub fn call(&self, strike: f64, maturity: f64, discount: f64) -> f64 {
        let k = strike - self.shift;
        if self.forward == 0.0 || k <= 0.0 {
            return discount * (self.shift + self.forward - strike).max(0.0);
        }
        call_unchecked(self.forward, maturity, k, self.stddev / maturity.sqrt(), discount)
    }
}

/// Three-moment basket call.
pub fn tm_pricer(spec: &BasketSpec, strike: f64) -> Result<f64> {
    if !strike.is_finite() {
        return Err(domain(format!("strike must be finite, got {strike}")));
    }
    let fit = ShiftedLognormal::fit(&basket_moments(spec))?;
    if fit.two_moment {
        log::warn!("basket third moment not positive; priced on two moments");
    }
    Ok(fit.call(strike, spec.maturity, spec.discount))
}

/// Per-asset jumps `(sigma_i / sigma0)^kappa * k_hat` for the basket's vols.
pub fn asset_jumps(spec: &BasketSpec, jp: &JumpParams) -> Result<Vec<f64>> {
    spec.vols.iter().map(|&s| jp.jump_for_vol(s)).collect()
}

/// The Poisson mixture of three-moment prices over a strike grid: conditional
/// on `n` jumps each asset is lognormal with forward
/// `F_i (1+k_i)^n exp(-lambda k_i T)` and vol `sqrt(sigma_i^2 + n delta^2 / T)`.
pub fn merton_basket_calls(spec: &BasketSpec, strikes: &[f64], jp: &JumpParams) -> Result<Vec<f64>> {
    jp.validate()?;
    if let Some(k) = strikes.iter().find(|k| !k.is_finite()) {
        return Err(domain(format!("strike must be finite, got {k}")));
    }
    let t = spec.maturity;
    let jumps = asset_jumps(spec, jp)?;
    let weights = PoissonWeights::new(jp.lambda * t)?;
    let mut prices = vec![0.0; strikes.len()];
    for (n, w) in weights.iter() {
        let forwards = spec
            .forwards
            .iter()
            .zip(&jumps)
            .map(|(f, k)| f * (n as f64 * k.ln_1p() - jp.lambda * k * t).exp())
            .collect();
        let vols = spec
            .vols
            .iter()
            .map(|s| if n == 0 { *s } else { (s * s + n as f64 * jp.delta * jp.delta / t).sqrt() })
            .collect();
        let fit = ShiftedLognormal::fit(&basket_moments(&spec.with_state(forwards, vols)))?;
        for (p, &k) in prices.iter_mut().zip(strikes) {
            *p += w * fit.call(k, t, spec.discount);
        }
    }
    Ok(prices)
}

pub fn merton_basket_call(spec: &BasketSpec, strike: f64, jp: &JumpParams) -> Result<f64> {
    Ok(merton_basket_calls(spec, &[strike], jp)?[0])
}

/// Flat correlation that makes the three-moment price of a lognormal basket
/// with the given vols equal `price`. Bisection on `[rho_min, 1]`.
pub fn implied_flat_correlation(spec: &BasketSpec, strike: f64, price: f64) -> Result<f64> {
    let n = spec.len();
    if n < 2 {
        return Err(domain("implied correlation needs at least two assets"));
    }
    let at = |rho: f64| -> Result<f64> {
        let mut s = spec.clone();
        s.correlation = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
        let fit = ShiftedLognormal::fit(&basket_moments(&s))?;
        Ok(fit.call(strike, s.maturity, s.discount))
    };
    let mut lo = -1.0 / (n - 1) as f64 + 1e-9;
    let mut hi = 1.0;
    if price < at(lo)? || price > at(hi)? {
        return Err(domain("basket price outside the range spanned by flat correlations"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? < price {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
