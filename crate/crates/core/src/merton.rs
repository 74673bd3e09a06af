//! Single-asset Merton jump-diffusion: the Poisson-mixture call and digital
//! put, the strike-dependent extension, the intensity sensitivity of the
//! digital, and exact terminal-value simulators used as oracles.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::black_scholes::{call_unchecked, check_inputs, digital_put_unchecked, put_unchecked};
use crate::curve::DiffusiveVolCurve;
use crate::error::{domain, Result};
use crate::jump::{JumpParams, PoissonWeights};
use crate::linalg::{check_correlation, cholesky_semidefinite};
use crate::normal;
use crate::rng::{open_uniform, poisson_by_inversion, std_normal, substream};

/// One asset at one maturity under the shared jump, with its jump size fixed.
///
/// Conditional on `n` jumps the terminal value is lognormal with forward
/// `F (1+k)^n exp(-lambda k T)` and variance `sigma^2 T + n delta^2`.
#[derive(Debug, Clone)]
pub struct MertonMixture {
    forward: f64,
    maturity: f64,
    discount: f64,
    jump: f64,
    lambda: f64,
    delta: f64,
    weights: PoissonWeights,
}

impl MertonMixture {
    /// `jump` is the asset's own mean jump, already scaled.
    pub fn new(forward: f64, maturity: f64, discount: f64, jump: f64, jp: &JumpParams) -> Result<Self> {
        check_inputs(forward, maturity, forward, 0.0, discount)?;
        jp.validate()?;
        if !(jump > -1.0 && jump.is_finite()) {
            return Err(domain(format!("asset jump must be > -1, got {jump}")));
        }
        Ok(Self {
            forward,
            maturity,
            discount,
            jump,
            lambda: jp.lambda,
            delta: jp.delta,
            weights: PoissonWeights::new(jp.lambda * maturity)?,
        })
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn weights(&self) -> &PoissonWeights {
        &self.weights
    }

    /// Forward conditional on `n` jumps.
    #[inline]
    pub fn conditional_forward(&self, n: usize) -> f64 {
        if n == 0 && self.lambda == 0.0 {
            return self.forward;
        }
        self.forward * (n as f64 * self.jump.ln_1p() - self.lambda * self.jump * self.maturity).exp()
    }

    /// Vol conditional on `n` jumps.
    #[inline]
    pub fn conditional_vol(&self, sigma: f64, n: usize) -> f64 {
        if n == 0 {
            sigma
        } else {
            (sigma * sigma + n as f64 * self.delta * self.delta / self.maturity).sqrt()
        }
    }

    /// Call conditional on `n` jumps, with diffusive vol `sigma`.
    #[inline]
    pub fn conditional_call(&self, strike: f64, sigma: f64, n: usize) -> f64 {
        call_unchecked(
            self.conditional_forward(n),
            self.maturity,
            strike,
            self.conditional_vol(sigma, n),
            self.discount,
        )
    }

    #[inline]
    pub fn conditional_put(&self, strike: f64, sigma: f64, n: usize) -> f64 {
        put_unchecked(self.conditional_forward(n), self.maturity, strike, self.conditional_vol(sigma, n), self.discount)
    }

    pub fn call(&self, strike: f64, sigma: f64) -> f64 {
        self.weights.iter().map(|(n, w)| w * self.conditional_call(strike, sigma, n)).sum()
    }

    pub fn put(&self, strike: f64, sigma: f64) -> f64 {
        self.weights.iter().map(|(n, w)| w * self.conditional_put(strike, sigma, n)).sum()
    }

    pub fn digital_put(&self, strike: f64, sigma: f64) -> f64 {
        self.weights
            .iter()
            .map(|(n, w)| {
                w * digital_put_unchecked(
                    self.conditional_forward(n),
                    self.maturity,
                    strike,
                    self.conditional_vol(sigma, n),
                    self.discount,
                )
            })
            .sum()
    }

    /// Derivative of [`Self::digital_put`] in the intensity, differentiating
    /// both the Poisson weights and the compensated forwards.
    pub fn digital_put_dlambda(&self, strike: f64, sigma: f64) -> f64 {
        let t = self.maturity;
        let w = self.weights.weights();
        let sqrt_t = t.sqrt();
        let mut total = 0.0;
        // one extra term picks up the weight flowing out of the last kept n
        for n in 0..=w.len() {
            let p_n = w.get(n).copied().unwrap_or(0.0);
            let p_prev = if n == 0 { 0.0 } else { w[n - 1] };
            let fwd = self.conditional_forward(n);
            let vol = self.conditional_vol(sigma, n);
            let sd = vol * sqrt_t;
            let dp = t * (p_prev - p_n);
            if sd < 1e-14 {
                let dig = digital_put_unchecked(fwd, t, strike, vol, self.discount);
                total += dp * dig;
                continue;
            }
            let d2 = ((fwd / strike).ln() - 0.5 * sd * sd) / sd;
            // d(-d2)/dlambda = k T / sd through the compensator exp(-lambda k T)
            total += self.discount * (dp * normal::cdf(-d2) + p_n * normal::pdf(d2) * self.jump * t / sd);
        }
        total
    }
}

fn mixture_for_vol(forward: f64, maturity: f64, sigma: f64, discount: f64, jp: &JumpParams) -> Result<MertonMixture> {
    let jump = jp.jump_for_vol(sigma)?;
    MertonMixture::new(forward, maturity, discount, jump, jp)
}

/// Merton call with constant diffusive vol; the jump size is scaled by `sigma`.
pub fn merton_call(
    forward: f64,
    maturity: f64,
    strike: f64,
    sigma: f64,
    discount: f64,
    jp: &JumpParams,
) -> Result<f64> {
    check_inputs(forward, maturity, strike, sigma, discount)?;
    if sigma == 0.0 {
        return Err(domain("diffusive vol must be positive for the jump-size rule"));
    }
    Ok(mixture_for_vol(forward, maturity, sigma, discount, jp)?.call(strike, sigma))
}

/// Mixture for a strike-dependent curve: the jump is scaled by the curve's
/// at-the-money level `sigma(F)`.
pub fn mixture_for_curve(
    forward: f64,
    maturity: f64,
    curve: &DiffusiveVolCurve,
    discount: f64,
    jp: &JumpParams,
) -> Result<MertonMixture> {
    mixture_for_vol(forward, maturity, curve.eval(forward), discount, jp)
}

/// Merton call whose diffusive vol is `curve(K)` in every term.
pub fn merton_call_extended(
    forward: f64,
    maturity: f64,
    strike: f64,
    curve: &DiffusiveVolCurve,
    discount: f64,
    jp: &JumpParams,
) -> Result<f64> {
    check_inputs(forward, maturity, strike, 0.0, discount)?;
    if curve.extrapolates(strike) {
        log::warn!("strike {strike} outside diffusive curve nodes; using flat extrapolation");
    }
    let mix = mixture_for_curve(forward, maturity, curve, discount, jp)?;
    Ok(mix.call(strike, curve.eval(strike)))
}

pub fn merton_digital_put(
    forward: f64,
    maturity: f64,
    strike: f64,
    sigma: f64,
    discount: f64,
    jp: &JumpParams,
) -> Result<f64> {
    check_inputs(forward, maturity, strike, sigma, discount)?;
    if sigma == 0.0 {
        return Err(domain("diffusive vol must be positive for the jump-size rule"));
    }
    Ok(mixture_for_vol(forward, maturity, sigma, discount, jp)?.digital_put(strike, sigma))
}

/// `d/dlambda` of [`merton_digital_put`], analytic.
pub fn digital_put_dlambda(
    forward: f64,
    maturity: f64,
    strike: f64,
    sigma: f64,
    discount: f64,
    jp: &JumpParams,
) -> Result<f64> {
    check_inputs(forward, maturity, strike, sigma, discount)?;
    if sigma == 0.0 {
        return Err(domain("diffusive vol must be positive for the jump-size rule"));
    }
    Ok(mixture_for_vol(forward, maturity, sigma, discount, jp)?.digital_put_dlambda(strike, sigma))
}

/// Exact terminal values of the single-asset jump-diffusion (forward
/// measure, compensated drift). Sample `i` uses stream `(seed, i)`.
pub fn simulate_merton_paths(
    forward: f64,
    maturity: f64,
    sigma: f64,
    jp: &JumpParams,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_inputs(forward, maturity, forward, sigma, 1.0)?;
    if n_paths == 0 {
        return Err(domain("n_paths must be at least 1"));
    }
    if sigma == 0.0 {
        return Err(domain("diffusive vol must be positive for the jump-size rule"));
    }
    let jump = jp.jump_for_vol(sigma)?;
    let intensity = jp.lambda * maturity;
    let log_jump = jump.ln_1p() - 0.5 * jp.delta * jp.delta;
    let drift = forward.ln() - jp.lambda * jump * maturity - 0.5 * sigma * sigma * maturity;
    let sd = sigma * maturity.sqrt();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let jumps = poisson_by_inversion(intensity, open_uniform(&mut rng));
            let z_diff = std_normal(&mut rng);
            let z_jump = std_normal(&mut rng);
            let nj = jumps as f64;
            (drift + sd * z_diff + nj * log_jump + jp.delta * nj.sqrt() * z_jump).exp()
        })
        .collect())
}

/// Inputs of the multi-asset oracle: per-asset forwards, diffusive vols and
/// (already scaled) mean jumps, sharing one Poisson clock.
#[derive(Debug, Clone)]
pub struct JointMertonSpec {
    pub forwards: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub jumps: Vec<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub correlation: DMatrix<f64>,
    pub maturity: f64,
}

/// Row-major `n_paths x n_assets` samples.
#[derive(Debug, Clone)]
pub struct JointSamples {
    pub n_assets: usize,
    /// Terminal values `S_T`.
    pub terminal: Vec<f64>,
    /// Accumulated instantaneous returns, the integral of `dS/S` over `[0, T]`.
    pub returns: Vec<f64>,
}

impl JointSamples {
    pub fn n_paths(&self) -> usize {
        self.terminal.len() / self.n_assets
    }

    pub fn terminal_row(&self, path: usize) -> &[f64] {
        &self.terminal[path * self.n_assets..(path + 1) * self.n_assets]
    }

    pub fn returns_row(&self, path: usize) -> &[f64] {
        &self.returns[path * self.n_assets..(path + 1) * self.n_assets]
    }
}

/// Exact simulation of correlated assets driven by one shared Poisson
/// process. The per-jump lognormal size noise is correlated like the
/// diffusions, and each jump is drawn individually so that accumulated
/// returns `sum(Y_j - 1)` are exact.
pub fn simulate_joint_merton(spec: &JointMertonSpec, n_paths: usize, seed: u64) -> Result<JointSamples> {
    let n = spec.forwards.len();
    if n == 0 || spec.sigmas.len() != n || spec.jumps.len() != n || spec.correlation.nrows() != n {
        return Err(domain("joint spec vectors and correlation must have matching sizes"));
    }
    if n_paths == 0 {
        return Err(domain("n_paths must be at least 1"));
    }
    check_correlation(&spec.correlation)?;
    for i in 0..n {
        check_inputs(spec.forwards[i], spec.maturity, spec.forwards[i], spec.sigmas[i], 1.0)?;
        if !(spec.jumps[i] > -1.0) {
            return Err(domain(format!("jump of asset {i} must be > -1")));
        }
    }
    JumpParams::new(spec.lambda, 0.0, spec.delta, 1.0, 0.0)?;
    let chol = cholesky_semidefinite(&spec.correlation)?;
    let t = spec.maturity;
    let sqrt_t = t.sqrt();
    let intensity = spec.lambda * t;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = substream(seed, p);
            let count = poisson_by_inversion(intensity, open_uniform(&mut rng));
            let mut z = vec![0.0; n];
            let mut w = vec![0.0; n];
            let correlate = |z: &[f64], w: &mut [f64]| {
                for i in 0..n {
                    w[i] = (0..=i).map(|k| chol[(i, k)] * z[k]).sum();
                }
            };
            z.iter_mut().for_each(|v| *v = std_normal(&mut rng));
            correlate(&z, &mut w);
            let mut log_s = vec![0.0; n];
            let mut ret = vec![0.0; n];
            for i in 0..n {
                let (s, k) = (spec.sigmas[i], spec.jumps[i]);
                log_s[i] = spec.forwards[i].ln() - spec.lambda * k * t - 0.5 * s * s * t + s * sqrt_t * w[i];
                ret[i] = -spec.lambda * k * t + s * sqrt_t * w[i];
            }
            for _ in 0..count {
                z.iter_mut().for_each(|v| *v = std_normal(&mut rng));
                correlate(&z, &mut w);
                for i in 0..n {
                    let log_y = spec.jumps[i].ln_1p() - 0.5 * spec.delta * spec.delta + spec.delta * w[i];
                    log_s[i] += log_y;
                    ret[i] += log_y.exp_m1();
                }
            }
            (log_s.into_iter().map(f64::exp).collect(), ret)
        })
        .collect();

    let mut terminal = Vec::with_capacity(n_paths * n);
    let mut returns = Vec::with_capacity(n_paths * n);
    for (s, r) in rows {
        terminal.extend(s);
        returns.extend(r);
    }
    Ok(JointSamples { n_assets: n, terminal, returns })
}
