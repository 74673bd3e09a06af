//! Black-Scholes building blocks on the forward: call, put, digital put and
//! implied-vol inversion.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, PriceBound, Result};
use crate::normal;

/// Total standard deviations below this are treated as deterministic.
const MIN_STDDEV: f64 = 1e-14;

/// One quoted European option on a forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub forward: f64,
    pub strike: f64,
    pub maturity: f64,
    pub discount: f64,
    pub implied_vol: f64,
}

impl OptionQuote {
    pub fn validate(&self) -> Result<()> {
        check_inputs(self.forward, self.maturity, self.strike, self.implied_vol, self.discount)
    }

    pub fn call_price(&self) -> Result<f64> {
        bs_call(self.forward, self.maturity, self.strike, self.implied_vol, self.discount)
    }
}

pub(crate) fn check_inputs(f: f64, t: f64, k: f64, vol: f64, df: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(domain(format!("forward must be positive and finite, got {f}")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(domain(format!("strike must be positive and finite, got {k}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(domain(format!("maturity must be positive and finite, got {t}")));
    }
    if !(vol.is_finite() && vol >= 0.0) {
        return Err(domain(format!("vol must be nonnegative and finite, got {vol}")));
    }
    if !(df > 0.0 && df <= 1.0) {
        return Err(domain(format!("discount factor must lie in (0, 1], got {df}")));
    }
    Ok(())
}

#[inline]
fn d1_d2(f: f64, k: f64, stddev: f64) -> (f64, f64) {
    let d1 = ((f / k).ln() + 0.5 * stddev * stddev) / stddev;
    (d1, d1 - stddev)
}

/// Unchecked call price; callers guarantee valid inputs.
#[inline]
pub(crate) fn call_unchecked(f: f64, t: f64, k: f64, vol: f64, df: f64) -> f64 {
    let stddev = vol * t.sqrt();
    if stddev < MIN_STDDEV {
        return df * (f - k).max(0.0);
    }
    let (d1, d2) = d1_d2(f, k, stddev);
    df * (f * normal::cdf(d1) - k * normal::cdf(d2))
}

/// Unchecked put, priced directly so that deep out-of-the-money values keep
/// their relative precision.
#[inline]
pub(crate) fn put_unchecked(f: f64, t: f64, k: f64, vol: f64, df: f64) -> f64 {
    let stddev = vol * t.sqrt();
    if stddev < MIN_STDDEV {
        return df * (k - f).max(0.0);
    }
    let (d1, d2) = d1_d2(f, k, stddev);
    df * (k * normal::cdf(-d2) - f * normal::cdf(-d1))
}

#[inline]
pub(crate) fn digital_put_unchecked(f: f64, t: f64, k: f64, vol: f64, df: f64) -> f64 {
    let stddev = vol * t.sqrt();
    if stddev < MIN_STDDEV {
        return if k > f {
            df
        } else if k < f {
            0.0
        } else {
            0.5 * df
        };
    }
    let (_, d2) = d1_d2(f, k, stddev);
    df * normal::cdf(-d2)
}

/// Discounted Black-Scholes call on a forward.
pub fn bs_call(forward: f64, maturity: f64, strike: f64, vol: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, maturity, strike, vol, discount)?;
    Ok(call_unchecked(forward, maturity, strike, vol, discount))
}

/// Discounted Black-Scholes put, written so that put-call parity holds to
/// rounding.
pub fn bs_put(forward: f64, maturity: f64, strike: f64, vol: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, maturity, strike, vol, discount)?;
    let stddev = vol * maturity.sqrt();
    if stddev < MIN_STDDEV {
        return Ok(discount * (strike - forward).max(0.0));
    }
    let (d1, d2) = d1_d2(forward, strike, stddev);
    Ok(discount * (strike * normal::cdf(-d2) - forward * normal::cdf(-d1)))
}

/// Discounted probability of finishing below the strike, `Df * N(-d2)`.
pub fn bs_digital_put(forward: f64, maturity: f64, strike: f64, vol: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, maturity, strike, vol, discount)?;
    Ok(digital_put_unchecked(forward, maturity, strike, vol, discount))
}

/// Sensitivity of the call to the vol.
pub fn bs_vega(forward: f64, maturity: f64, strike: f64, vol: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, maturity, strike, vol, discount)?;
    let stddev = vol * maturity.sqrt();
    if stddev < MIN_STDDEV {
        return Ok(0.0);
    }
    let (d1, _) = d1_d2(forward, strike, stddev);
    Ok(discount * forward * normal::pdf(d1) * maturity.sqrt())
}

const VOL_BRACKET: (f64, f64) = (1e-6, 5.0);
const MAX_IV_ITERATIONS: usize = 200;

/// Black-Scholes implied vol of a discounted call price.
///
/// Safeguarded Newton inside a bracket that starts at `[1e-6, 5]` and is
/// widened only when the root provably lies outside it. Newton steps that
/// leave the bracket are replaced by bisection.
pub fn implied_vol(price: f64, forward: f64, maturity: f64, strike: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, maturity, strike, 0.0, discount)?;
    if !price.is_finite() {
        return Err(domain(format!("price must be finite, got {price}")));
    }
    let lower = discount * (forward - strike).max(0.0);
    let upper = discount * forward;
    if price <= lower {
        return Err(Error::NoSolution { price, bound: PriceBound::Lower, limit: lower });
    }
    if price >= upper {
        return Err(Error::NoSolution { price, bound: PriceBound::Upper, limit: upper });
    }

    let f = |v: f64| call_unchecked(forward, maturity, strike, v, discount) - price;
    let (mut lo, mut hi) = VOL_BRACKET;
    if f(lo) > 0.0 {
        lo = 0.0;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NoSolution { price, bound: PriceBound::Upper, limit: upper });
        }
    }

    let sqrt_t = maturity.sqrt();
    // Inflection point of the price in vol: Newton from here converges monotonically.
    let log_moneyness = (forward / strike).ln().abs();
    let mut v = if log_moneyness > 1e-12 {
        (2.0 * log_moneyness / maturity).sqrt()
    } else {
        price / (0.4 * discount * forward * sqrt_t)
    };
    if !(v > lo && v < hi) {
        v = 0.5 * (lo + hi);
    }

    for _ in 0..MAX_IV_ITERATIONS {
        let diff = f(v);
        if diff == 0.0 {
            return Ok(v);
        }
        if diff > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let stddev = v * sqrt_t;
        let vega = if stddev < MIN_STDDEV {
            0.0
        } else {
            let (d1, _) = d1_d2(forward, strike, stddev);
            discount * forward * normal::pdf(d1) * sqrt_t
        };
        let newton = v - diff / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 1e-15 * v.max(1e-3) || hi - lo <= 1e-15 {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vol_is_intrinsic() {
        assert_eq!(bs_call(100.0, 1.0, 100.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(bs_call(100.0, 1.0, 90.0, 0.0, 0.9).unwrap(), 9.0);
        assert_eq!(bs_digital_put(100.0, 1.0, 90.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn deep_itm_call_is_forward() {
        let c = bs_call(100.0, 1.0, 1e-9, 0.2, 1.0).unwrap();
        assert!((c - 100.0).abs() < 1e-6);
    }

    #[test]
    fn digital_put_certain_exercise() {
        let p = bs_digital_put(100.0, 1.0, 1e8, 0.3, 0.95).unwrap();
        assert!((p - 0.95).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(bs_call(-1.0, 1.0, 100.0, 0.2, 1.0).is_err());
        assert!(bs_call(100.0, 0.0, 100.0, 0.2, 1.0).is_err());
        assert!(bs_call(100.0, 1.0, 0.0, 0.2, 1.0).is_err());
        assert!(bs_call(100.0, 1.0, 100.0, -0.2, 1.0).is_err());
        assert!(bs_call(100.0, 1.0, 100.0, 0.2, 1.5).is_err());
        assert!(bs_call(100.0, 1.0, 100.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn implied_vol_round_trips() {
        let p = bs_call(100.0, 1.0, 100.0, 0.2, 1.0).unwrap();
        assert!((implied_vol(p, 100.0, 1.0, 100.0, 1.0).unwrap() - 0.2).abs() < 1e-8);
        let p = bs_call(100.0, 2.0, 80.0, 0.35, 0.97).unwrap();
        assert!((implied_vol(p, 100.0, 2.0, 80.0, 0.97).unwrap() - 0.35).abs() < 1e-8);
    }

    #[test]
    fn implied_vol_reports_bound() {
        match implied_vol(20.0, 100.0, 1.0, 80.0, 1.0) {
            Err(Error::NoSolution { bound: PriceBound::Lower, .. }) => {}
            other => panic!("expected lower-bound error, got {other:?}"),
        }
        match implied_vol(100.0, 100.0, 1.0, 80.0, 1.0) {
            Err(Error::NoSolution { bound: PriceBound::Upper, .. }) => {}
            other => panic!("expected upper-bound error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn put_call_parity(f in 1.0..500.0f64, m in 0.3..3.0f64, t in 0.01..5.0f64,
                           vol in 0.0..2.0f64, df in 0.5..1.0f64) {
            let k = f * m;
            let c = bs_call(f, t, k, vol, df).unwrap();
            let p = bs_put(f, t, k, vol, df).unwrap();
            prop_assert!((c - p - df * (f - k)).abs() <= 1e-12 * f.max(k));
        }

        #[test]
        fn call_monotone(f in 10.0..200.0f64, m in 0.5..2.0f64, t in 0.05..3.0f64,
                         vol in 0.01..1.5f64) {
            let k = f * m;
            let c = call_unchecked(f, t, k, vol, 1.0);
            prop_assert!(call_unchecked(f, t, k, vol * 1.01, 1.0) >= c - 1e-12 * f);
            prop_assert!(call_unchecked(f * 1.01, t, k, vol, 1.0) >= c - 1e-12 * f);
            prop_assert!(call_unchecked(f, t, k * 1.01, vol, 1.0) <= c + 1e-12 * f);
        }

        #[test]
        fn digital_put_nondecreasing_in_strike(f in 10.0..200.0f64, m in 0.3..3.0f64,
                                               t in 0.05..3.0f64, vol in 0.01..1.0f64) {
            let k = f * m;
            let h = 1e-4 * k;
            let slope = (digital_put_unchecked(f, t, k + h, vol, 1.0)
                - digital_put_unchecked(f, t, k - h, vol, 1.0)) / (2.0 * h);
            prop_assert!(slope >= -1e-12);
        }

        #[test]
        fn implied_vol_inverts_call(f in 50.0..150.0f64, m in 0.7..1.4f64, t in 0.1..3.0f64,
                                    vol in 0.01..2.0f64) {
            let k = f * m;
            let price = call_unchecked(f, t, k, vol, 1.0);
            // skip quotes whose time value underflows relative to the price
            prop_assume!(price - (f - k).max(0.0) > 1e-9 * f);
            let iv = implied_vol(price, f, t, k, 1.0).unwrap();
            prop_assert!((iv - vol).abs() < 1e-8, "iv {} vs {}", iv, vol);
            prop_assert!((call_unchecked(f, t, k, iv, 1.0) - price).abs() < 1e-10 * f);
        }
    }
}
