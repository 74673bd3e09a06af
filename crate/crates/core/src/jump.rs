//! The shared Poisson jump: parameters, the vol-scaled jump-size rule and the
//! truncated Poisson weights every mixture pricer sums over.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Required cumulative Poisson mass of a truncated series.
pub const SERIES_MASS: f64 = 1.0 - 1e-12;
/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 200;

/// The systemic jump tuple: intensity, universal mean jump, jump vol, plus
/// the vol scale and elasticity that turn the universal jump into per-asset
/// jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    /// Expected jumps per year.
    pub lambda: f64,
    /// Universal mean proportional jump size `E[Y] - 1`.
    pub k_hat: f64,
    /// Lognormal vol of the jump size.
    pub delta: f64,
    /// Reference vol at which an asset receives exactly `k_hat`.
    pub sigma0: f64,
    /// Elasticity of the jump size to the asset's diffusive vol.
    pub kappa: f64,
}

impl JumpParams {
    pub fn new(lambda: f64, k_hat: f64, delta: f64, sigma0: f64, kappa: f64) -> Result<Self> {
        let jp = Self { lambda, k_hat, delta, sigma0, kappa };
        jp.validate()?;
        Ok(jp)
    }

    /// No jumps at all.
    pub fn none() -> Self {
        Self { lambda: 0.0, k_hat: 0.0, delta: 0.0, sigma0: 0.18, kappa: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.k_hat.is_finite() && self.k_hat > -1.0) {
            return Err(domain(format!("k_hat must be > -1, got {}", self.k_hat)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(domain(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(domain(format!("sigma0 must be > 0, got {}", self.sigma0)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(domain(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// Mean jump for an asset with diffusive vol `sigma`.
    pub fn jump_for_vol(&self, sigma: f64) -> Result<f64> {
        scaled_jump_size(self.k_hat, sigma, self.sigma0, self.kappa)
    }
}

/// `(sigma / sigma0)^kappa * k_hat`, rejected when the result would allow a
/// nonpositive price.
pub fn scaled_jump_size(k_hat: f64, sigma: f64, sigma0: f64, kappa: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(domain(format!("sigma must be > 0, got {sigma}")));
    }
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(domain(format!("sigma0 must be > 0, got {sigma0}")));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(domain(format!("kappa must be >= 0, got {kappa}")));
    }
    if !(k_hat.is_finite() && k_hat > -1.0) {
        return Err(domain(format!("k_hat must be > -1, got {k_hat}")));
    }
    let scaled = if kappa == 0.0 { k_hat } else { (sigma / sigma0).powf(kappa) * k_hat };
    if scaled <= -1.0 {
        return Err(Error::JumpTooLarge { scaled });
    }
    Ok(scaled)
}

/// Poisson probabilities `P(N = n)` for `n = 0..len`, truncated once the
/// cumulative mass reaches [`SERIES_MASS`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    weights: Vec<f64>,
    intensity: f64,
}

impl PoissonWeights {
    /// Weights for a Poisson variable with mean `intensity = lambda * T`.
    pub fn new(intensity: f64) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(domain(format!("Poisson mean must be >= 0, got {intensity}")));
        }
        if intensity == 0.0 {
            return Ok(Self { weights: vec![1.0], intensity });
        }
        let ln_mu = intensity.ln();
        let mut ln_fact = 0.0;
        let mut weights = Vec::new();
        let mut mass = 0.0;
        for n in 0..=MAX_SERIES_TERMS {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let w = (-intensity + n as f64 * ln_mu - ln_fact).exp();
            weights.push(w);
            mass += w;
            // past the mode the remaining tail is bounded by a geometric series
            if mass >= SERIES_MASS && n as f64 >= intensity {
                return Ok(Self { weights, intensity });
            }
        }
        Err(Error::Truncation { tail: (1.0 - mass).max(0.0), terms: weights.len(), intensity })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// `(n, P(N = n))` in ascending `n`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().copied().enumerate()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}
