use serde::{Deserialize, Serialize};

use crate::black_scholes::{call_unchecked, check_inputs};
use crate::curve::MonotoneCubic;
use crate::error::{domain, Result};

/// Market implied vols of one asset at one maturity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurfaceSlice {
    pub asset_id: String,
    pub maturity: f64,
    pub forward: f64,
    pub discount: f64,
    pub strikes: Vec<f64>,
    pub vols: Vec<f64>,
}

impl VolSurfaceSlice {
    pub fn new(
        asset_id: impl Into<String>,
        maturity: f64,
        forward: f64,
        discount: f64,
        strikes: Vec<f64>,
        vols: Vec<f64>,
    ) -> Result<Self> {
        let s = Self { asset_id: asset_id.into(), maturity, forward, discount, strikes, vols };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_inputs(self.forward, self.maturity, self.forward, 0.0, self.discount)?;
        if self.strikes.len() != self.vols.len() {
            return Err(domain(format!("slice {}: strikes and vols differ in length", self.asset_id)));
        }
        if self.strikes.len() < 3 {
            return Err(domain(format!("slice {}: at least 3 quotes required", self.asset_id)));
        }
        if self.strikes.iter().any(|&k| !(k.is_finite() && k > 0.0)) {
            return Err(domain(format!("slice {}: strikes must be positive", self.asset_id)));
        }
        if self.strikes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain(format!("slice {}: strikes must be strictly ascending", self.asset_id)));
        }
        if let Some(v) = self.vols.iter().find(|&&v| !(v > 0.0 && v < 3.0)) {
            return Err(domain(format!("slice {}: vol {v} outside (0, 3)", self.asset_id)));
        }
        Ok(())
    }

    fn interpolant(&self) -> MonotoneCubic {
        MonotoneCubic::new(self.strikes.clone(), self.vols.clone()).expect("validated slice")
    }

    /// Market vol at any strike: monotone cubic between quotes, flat outside.
    pub fn market_vol(&self, strike: f64) -> f64 {
        self.interpolant().eval(strike)
    }

    pub fn atm_vol(&self) -> f64 {
        self.market_vol(self.forward)
    }

    pub fn call_prices(&self) -> Vec<f64> {
        self.strikes
            .iter()
            .zip(&self.vols)
            .map(|(&k, &v)| call_unchecked(self.forward, self.maturity, k, v, self.discount))
            .collect()
    }

    /// Quote indices where call prices fail to be convex in strike.
    pub fn butterfly_violations(&self) -> Vec<usize> {
        let c = self.call_prices();
        let k = &self.strikes;
        (1..k.len() - 1)
            .filter(|&i| {
                let w = (k[i] - k[i - 1]) / (k[i + 1] - k[i - 1]);
                let chord = (1.0 - w) * c[i - 1] + w * c[i + 1];
                c[i] > chord + 1e-12 * self.forward
            })
            .collect()
    }
}
