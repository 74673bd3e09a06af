//! Gaussian-copula Monte Carlo basket pricing over option-implied marginals,
//! and its Poisson mixture under a shared jump.
//!
//! Each sample draws correlated normals `w`, maps them to uniforms `N(w_i)`,
//! inverts every asset's marginal and pays `(sum alpha_i S_i - K)^+`. Under a
//! shared jump the same normals are reused for every jump count `n`, and the
//! conditional payoffs are weighted by `P(N = n)`.
//!
//! Sample `i` draws from stream `(seed, i)`, and partial sums are formed over
//! fixed blocks of samples combined in block order, so results are
//! bit-identical for any thread count or batch size.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::black_scholes::implied_vol;
use crate::curve::DiffusiveVolCurve;
use crate::error::{domain, Result};
use crate::jump::{JumpParams, PoissonWeights};
use crate::linalg::{cholesky_semidefinite, repair_correlation};
use crate::marginal::MarginalDistribution;
use crate::merton::{mixture_for_curve, MertonMixture};
use crate::normal;
use crate::rng::{std_normal, substream};

/// Smallest path count accepted for pricing.
pub const MIN_PRICING_PATHS: usize = 1_000;
const BLOCK: usize = 256;

/// Monte Carlo settings. The seed has no default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    /// Total samples, antithetic partners included.
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Scheduling granularity in samples; does not affect results.
    pub batch_size: usize,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, antithetic: true, batch_size: 16_384 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PRICING_PATHS {
            return Err(domain(format!(
                "n_paths must be at least {MIN_PRICING_PATHS} for pricing, got {}",
                self.n_paths
            )));
        }
        if self.batch_size == 0 {
            return Err(domain("batch_size must be positive"));
        }
        Ok(())
    }

    /// Independent estimator units: antithetic pairs or single samples.
    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

/// Contribution of one jump count to a mixture price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermPrices {
    pub jumps: usize,
    pub weight: f64,
    /// Unweighted conditional copula price per strike.
    pub prices: Vec<f64>,
}

/// Copula prices over a strike grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopulaPrices {
    pub strikes: Vec<f64>,
    pub prices: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Draws pinned to a grid end or clipped uniform, summed over assets and terms.
    pub clamped: u64,
    pub samples: usize,
    pub terms: Vec<TermPrices>,
}

struct Partial {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    term_sum: Vec<Vec<f64>>,
    clamped: u64,
}

struct Term<'a> {
    weight: f64,
    marginals: &'a [MarginalDistribution],
}

fn run(
    terms: &[Term<'_>],
    alphas: &[f64],
    strikes: &[f64],
    correlation: &DMatrix<f64>,
    discount: f64,
    mc: &McConfig,
) -> Result<CopulaPrices> {
    mc.validate()?;
    let n = alphas.len();
    let chol = cholesky_semidefinite(&repair_correlation(correlation)?)?;
    let units = mc.units();
    let blocks = units.div_ceil(BLOCK);
    let m = strikes.len();
    let signs: &[f64] = if mc.antithetic { &[1.0, -1.0] } else { &[1.0] };
    let min_len = (mc.batch_size / BLOCK).max(1);

    let partials: Vec<Partial> = (0..blocks)
        .into_par_iter()
        .with_min_len(min_len)
        .map(|b| {
            let mut part = Partial {
                sum: vec![0.0; m],
                sum_sq: vec![0.0; m],
                term_sum: vec![vec![0.0; m]; terms.len()],
                clamped: 0,
            };
            let mut z = vec![0.0; n];
            let mut w = vec![0.0; n];
            let mut u = vec![0.0; n];
            let mut unit = vec![0.0; m];
            for idx in b * BLOCK..((b + 1) * BLOCK).min(units) {
                let mut rng = substream(mc.seed, idx as u64);
                z.iter_mut().for_each(|v| *v = std_normal(&mut rng));
                for i in 0..n {
                    w[i] = (0..=i).map(|k| chol[(i, k)] * z[k]).sum();
                }
                unit.iter_mut().for_each(|v| *v = 0.0);
                for &sign in signs {
                    for i in 0..n {
                        u[i] = normal::cdf(sign * w[i]);
                    }
                    for (t, term) in terms.iter().enumerate() {
                        let mut basket = 0.0;
                        for i in 0..n {
                            let d = term.marginals[i].quantile(u[i]);
                            part.clamped += d.clamped as u64;
                            basket += alphas[i] * d.value;
                        }
                        for (s, &k) in strikes.iter().enumerate() {
                            let pay = discount * (basket - k).max(0.0);
                            part.term_sum[t][s] += pay / signs.len() as f64;
                            unit[s] += term.weight * pay / signs.len() as f64;
                        }
                    }
                }
                for ((sum, sq), u) in part.sum.iter_mut().zip(&mut part.sum_sq).zip(&unit) {
                    *sum += u;
                    *sq += u * u;
                }
            }
            part
        })
        .collect();

    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut term_sum = vec![vec![0.0; m]; terms.len()];
    let mut clamped = 0;
    for p in &partials {
        for s in 0..m {
            sum[s] += p.sum[s];
            sum_sq[s] += p.sum_sq[s];
        }
        for (total, part) in term_sum.iter_mut().zip(&p.term_sum) {
            for (a, b) in total.iter_mut().zip(part) {
                *a += b;
            }
        }
        clamped += p.clamped;
    }
    let count = units as f64;
    let prices: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let std_errors = sum_sq
        .iter()
        .zip(&prices)
        .map(|(sq, mean)| {
            let var = (sq / count - mean * mean).max(0.0) * count / (count - 1.0).max(1.0);
            (var / count).sqrt()
        })
        .collect();
    let terms = terms
        .iter()
        .zip(term_sum)
        .enumerate()
        .map(|(jumps, (t, s))| TermPrices {
            jumps,
            weight: t.weight,
            prices: s.into_iter().map(|v| v / count).collect(),
        })
        .collect();
    Ok(CopulaPrices { strikes: strikes.to_vec(), prices, std_errors, clamped, samples: units * signs.len(), terms })
}

fn check_basket(marginals: &[MarginalDistribution], alphas: &[f64], strikes: &[f64], rho: &DMatrix<f64>) -> Result<()> {
    let n = marginals.len();
    if n == 0 || alphas.len() != n || rho.nrows() != n || rho.ncols() != n {
        return Err(domain("marginals, weights and correlation must have matching nonzero sizes"));
    }
    if alphas.iter().any(|a| !a.is_finite()) || strikes.iter().any(|k| !k.is_finite()) {
        return Err(domain("weights and strikes must be finite"));
    }
    let t = marginals[0].maturity();
    if marginals.iter().any(|m| (m.maturity() - t).abs() > 1e-12) {
        return Err(domain("all marginals must share one maturity"));
    }
    Ok(())
}

/// Gaussian-copula price of `(sum alpha_i S_i - K)^+` for each strike.
pub fn basket_copula_pricer(
    marginals: &[MarginalDistribution],
    weights: &[f64],
    strikes: &[f64],
    rho: &DMatrix<f64>,
    mc: &McConfig,
) -> Result<CopulaPrices> {
    check_basket(marginals, weights, strikes, rho)?;
    let discount = marginals[0].discount();
    run(&[Term { weight: 1.0, marginals }], weights, strikes, rho, discount, mc)
}

/// Assets of a skew-consistent basket at one maturity.
#[derive(Debug, Clone)]
pub struct CopulaBasket {
    pub asset_ids: Vec<String>,
    pub forwards: Vec<f64>,
    pub curves: Vec<DiffusiveVolCurve>,
    pub weights: Vec<f64>,
    pub maturity: f64,
    pub discount: f64,
}

impl CopulaBasket {
    pub fn basket_forward(&self) -> f64 {
        self.weights.iter().zip(&self.forwards).map(|(a, f)| a * f).sum()
    }

    pub fn mixtures(&self, jp: &JumpParams) -> Result<Vec<MertonMixture>> {
        self.forwards
            .iter()
            .zip(&self.curves)
            .map(|(&f, c)| mixture_for_curve(f, self.maturity, c, self.discount, jp))
            .collect()
    }

    /// Conditional marginals for every jump count kept by the series.
    pub fn conditional_marginals(&self, jp: &JumpParams) -> Result<(PoissonWeights, Vec<Vec<MarginalDistribution>>)> {
        let n = self.forwards.len();
        if n == 0 || self.curves.len() != n || self.weights.len() != n || self.asset_ids.len() != n {
            return Err(domain("copula basket vectors must be nonempty and equally long"));
        }
        let mixtures = self.mixtures(jp)?;
        let weights = PoissonWeights::new(jp.lambda * self.maturity)?;
        let per_term = (0..weights.len())
            .into_par_iter()
            .map(|j| {
                (0..n)
                    .map(|i| {
                        MarginalDistribution::conditional(self.asset_ids[i].clone(), &mixtures[i], &self.curves[i], j)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((weights, per_term))
    }
}

/// Shared-jump copula basket: the Poisson mixture of copula prices over
/// `n`-jump conditional marginals, with common random numbers across `n`.
pub fn merton_copula_basket(
    basket: &CopulaBasket,
    strikes: &[f64],
    rho_diffusive: &DMatrix<f64>,
    jp: &JumpParams,
    mc: &McConfig,
) -> Result<CopulaPrices> {
    jp.validate()?;
    let (weights, per_term) = basket.conditional_marginals(jp)?;
    check_basket(&per_term[0], &basket.weights, strikes, rho_diffusive)?;
    let terms: Vec<Term<'_>> = weights.iter().map(|(n, w)| Term { weight: w, marginals: &per_term[n] }).collect();
    run(&terms, &basket.weights, strikes, rho_diffusive, basket.discount, mc)
}

/// Implied vols of basket call prices; strikes whose price violates the
/// arbitrage bounds come back as `None` and are listed in `omitted`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpliedCurve {
    pub strikes: Vec<f64>,
    pub vols: Vec<Option<f64>>,
    pub omitted: Vec<usize>,
}

pub fn implied_basket_vol_curve(
    strikes: &[f64],
    prices: &[f64],
    basket_forward: f64,
    discount: f64,
    maturity: f64,
) -> Result<ImpliedCurve> {
    if strikes.len() != prices.len() {
        return Err(domain("strikes and prices must have equal length"));
    }
    let mut vols = Vec::with_capacity(strikes.len());
    let mut omitted = Vec::new();
    for (i, (&k, &p)) in strikes.iter().zip(prices).enumerate() {
        match implied_vol(p, basket_forward, maturity, k, discount) {
            Ok(v) => vols.push(Some(v)),
            Err(_) => {
                vols.push(None);
                omitted.push(i);
            }
        }
    }
    Ok(ImpliedCurve { strikes: strikes.to_vec(), vols, omitted })
}
