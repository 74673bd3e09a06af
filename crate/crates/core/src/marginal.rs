//! Option-implied terminal distributions and their quantile functions.
//!
//! The distribution function is read off option prices, `cdf(K) = 1 + dC/dK / Df`
//! (equivalently `dP/dK / Df`), with the strike derivative taken by central
//! differences at every node of a dense geometric grid. The density (second
//! difference) supplies node slopes for a monotone cubic Hermite interpolant,
//! which is then inverted per draw.

use crate::black_scholes::{call_unchecked, check_inputs, put_unchecked};
use crate::curve::DiffusiveVolCurve;
use crate::error::{domain, Result};
use crate::jump::JumpParams;
use crate::merton::{mixture_for_curve, MertonMixture};

/// Grid size of the finite-difference distribution.
pub const GRID_POINTS: usize = 801;
/// Raw cdf decreases larger than this are reported as repairs.
pub const REPAIR_TOLERANCE: f64 = 1e-6;
/// Uniforms are clamped into `[U_CLAMP, 1 - U_CLAMP]` before inversion.
pub const U_CLAMP: f64 = 1e-9;

const CDF_BUMP: f64 = 1e-4;
const DENSITY_BUMP: f64 = 1e-3;
const SPAN_STDDEVS: f64 = 8.0;

/// Strike range `[lo, hi]` covering at least `[0.2 F, 3 F]` and eight
/// standard deviations either side of a lognormal with total stddev `stddev`.
pub fn grid_span(forward: f64, stddev: f64) -> (f64, f64) {
    let drift = -0.5 * stddev * stddev;
    let lo = forward * (drift - SPAN_STDDEVS * stddev).exp().min(0.2);
    let hi = forward * (drift + SPAN_STDDEVS * stddev).exp().max(3.0);
    (lo, hi)
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// Per-asset terminal distribution with an invertible cdf.
#[derive(Debug, Clone)]
pub struct MarginalDistribution {
    asset_id: String,
    forward: f64,
    maturity: f64,
    discount: f64,
    strikes: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    repair: f64,
}

/// Outcome of one quantile lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub value: f64,
    /// The uniform was clipped to `[U_CLAMP, 1 - U_CLAMP]` or fell outside the
    /// tabulated cdf range and was pinned to a grid end.
    pub clamped: bool,
}

impl MarginalDistribution {
    /// Builds the distribution from discounted call and put price functions
    /// that satisfy parity. Strike derivatives are taken on the put below the
    /// forward and on the call above it, where each is far from its
    /// intrinsic value and keeps full relative precision.
    pub fn from_option_prices<C: Fn(f64) -> f64, P: Fn(f64) -> f64>(
        asset_id: impl Into<String>,
        forward: f64,
        maturity: f64,
        discount: f64,
        strikes: Vec<f64>,
        call: C,
        put: P,
    ) -> Result<Self> {
        let asset_id = asset_id.into();
        check_inputs(forward, maturity, forward, 0.0, discount)?;
        if strikes.len() < 3 || strikes.windows(2).any(|w| !(w[1] > w[0])) || !(strikes[0] > 0.0) {
            return Err(domain("distribution grid needs >= 3 positive ascending strikes"));
        }
        let mut cdf = Vec::with_capacity(strikes.len());
        let mut slopes = Vec::with_capacity(strikes.len());
        let mut repair = 0.0f64;
        let mut running = 0.0f64;
        for &k in &strikes {
            let h = CDF_BUMP * k;
            let g = DENSITY_BUMP * k;
            let (raw, density) = if k < forward {
                let raw = (put(k + h) - put(k - h)) / (2.0 * h * discount);
                (raw, (put(k + g) - 2.0 * put(k) + put(k - g)) / (g * g * discount))
            } else {
                let raw = 1.0 + (call(k + h) - call(k - h)) / (2.0 * h * discount);
                (raw, (call(k + g) - 2.0 * call(k) + call(k - g)) / (g * g * discount))
            };
            if running - raw > repair {
                repair = running - raw;
            }
            running = running.max(raw).clamp(0.0, 1.0);
            cdf.push(running);
            slopes.push(density.max(0.0));
        }
        if repair > REPAIR_TOLERANCE {
            log::warn!("distribution of {asset_id:?} not monotone in strike (largest drop {repair:.3e}); repaired");
        }
        Self::finish(asset_id, forward, maturity, discount, strikes, cdf, slopes, repair)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        asset_id: String,
        forward: f64,
        maturity: f64,
        discount: f64,
        strikes: Vec<f64>,
        cdf: Vec<f64>,
        mut slopes: Vec<f64>,
        repair: f64,
    ) -> Result<Self> {
        // Fritsch-Carlson limiter keeps every Hermite piece monotone.
        for i in 0..strikes.len() - 1 {
            let h = strikes[i + 1] - strikes[i];
            let secant = (cdf[i + 1] - cdf[i]) / h;
            if secant <= 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secant;
            let b = slopes[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * secant;
                slopes[i + 1] = tau * b * secant;
            }
        }
        Ok(Self { asset_id, forward, maturity, discount, strikes, cdf, slopes, repair })
    }

    pub fn with_asset_id(mut self, id: impl Into<String>) -> Self {
        self.asset_id = id.into();
        self
    }

    /// Lognormal terminal distribution of a Black-Scholes forward.
    pub fn lognormal(
        asset_id: impl Into<String>,
        forward: f64,
        maturity: f64,
        vol: f64,
        discount: f64,
    ) -> Result<Self> {
        check_inputs(forward, maturity, forward, vol, discount)?;
        let (lo, hi) = grid_span(forward, vol * maturity.sqrt());
        let grid = geometric_grid(lo, hi, GRID_POINTS);
        Self::from_option_prices(
            asset_id,
            forward,
            maturity,
            discount,
            grid,
            |k| call_unchecked(forward, maturity, k, vol, discount),
            |k| put_unchecked(forward, maturity, k, vol, discount),
        )
    }

    /// Distribution conditional on exactly `n` jumps, diffusive vol `curve(K)`.
    pub fn conditional(
        asset_id: impl Into<String>,
        mixture: &MertonMixture,
        curve: &DiffusiveVolCurve,
        n: usize,
    ) -> Result<Self> {
        let fwd = mixture.conditional_forward(n);
        let t = mixture.maturity();
        let sd = mixture.conditional_vol(curve.max_vol(), n) * t.sqrt();
        let (lo, hi) = grid_span(fwd, sd);
        let grid = geometric_grid(lo, hi, GRID_POINTS);
        Self::from_option_prices(
            asset_id,
            fwd,
            t,
            mixture.discount(),
            grid,
            |k| mixture.conditional_call(k, curve.eval(k), n),
            |k| mixture.conditional_put(k, curve.eval(k), n),
        )
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
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

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }

    /// Largest decrease of the raw finite-difference cdf that was repaired.
    pub fn repair_magnitude(&self) -> f64 {
        self.repair
    }

    pub fn needed_repair(&self) -> bool {
        self.repair > REPAIR_TOLERANCE
    }

    #[inline]
    fn hermite(&self, i: usize, s: f64) -> (f64, f64) {
        let h = self.strikes[i + 1] - self.strikes[i];
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value =
            (2.0 * s3 - 3.0 * s2 + 1.0) * c0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * c1 + (s3 - s2) * m1;
        let deriv = (6.0 * s2 - 6.0 * s) * c0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (6.0 * s - 6.0 * s2) * c1
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, deriv)
    }

    pub fn cdf(&self, strike: f64) -> f64 {
        let n = self.strikes.len();
        if !(strike > self.strikes[0]) {
            return if strike < self.strikes[0] { 0.0 } else { self.cdf[0] };
        }
        if strike >= self.strikes[n - 1] {
            return 1.0;
        }
        let i = self.strikes.partition_point(|&k| k <= strike) - 1;
        let s = (strike - self.strikes[i]) / (self.strikes[i + 1] - self.strikes[i]);
        // rounding can leave the monotone interpolant an ulp outside its nodes
        self.hermite(i, s).0.clamp(self.cdf[i], self.cdf[i + 1])
    }

    /// Inverse cdf after clamping `u` into `[U_CLAMP, 1 - U_CLAMP]`.
    pub fn quantile(&self, u: f64) -> Draw {
        let clipped = !(U_CLAMP..=1.0 - U_CLAMP).contains(&u);
        let u = u.clamp(U_CLAMP, 1.0 - U_CLAMP);
        let n = self.cdf.len();
        if u < self.cdf[0] {
            return Draw { value: self.strikes[0], clamped: true };
        }
        if u >= self.cdf[n - 1] {
            return Draw { value: self.strikes[n - 1], clamped: clipped || u > self.cdf[n - 1] };
        }
        let i = self.cdf.partition_point(|&c| c <= u) - 1;
        let (k0, k1) = (self.strikes[i], self.strikes[i + 1]);
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let tol = 1e-10 * k0 / (k1 - k0);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = ((u - c0) / (c1 - c0)).clamp(0.0, 1.0);
        for _ in 0..64 {
            let (v, d) = self.hermite(i, s);
            let r = v - u;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let newton = s - r / d;
            let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - s).abs();
            s = next;
            if step <= tol {
                break;
            }
        }
        Draw { value: k0 + s * (k1 - k0), clamped: clipped }
    }
}

/// Unconditional option-implied distribution of the extended Merton model,
/// `cdf(K) = 1 + (1/Df) dC/dK` with the strike derivative including the
/// `d sigma / dK` skew term.
pub fn marginal_distribution(
    forward: f64,
    maturity: f64,
    curve: &DiffusiveVolCurve,
    discount: f64,
    jp: &JumpParams,
) -> Result<MarginalDistribution> {
    let mix = mixture_for_curve(forward, maturity, curve, discount, jp)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (n, w) in mix.weights().iter() {
        if w < 1e-14 && n > 0 {
            continue;
        }
        let sd = mix.conditional_vol(curve.max_vol(), n) * maturity.sqrt();
        let (l, h) = grid_span(mix.conditional_forward(n), sd);
        lo = lo.min(l);
        hi = hi.max(h);
    }
    let (l, h) = grid_span(forward, curve.max_vol() * maturity.sqrt());
    let grid = geometric_grid(lo.min(l), hi.max(h), GRID_POINTS);
    MarginalDistribution::from_option_prices(
        "",
        forward,
        maturity,
        discount,
        grid,
        |k| mix.call(k, curve.eval(k)),
        |k| mix.put(k, curve.eval(k)),
    )
}
