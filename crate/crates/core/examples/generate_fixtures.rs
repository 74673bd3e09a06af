//! Regenerates the synthetic market-data bundles under `fixtures/`.
//!
//! `dax_synthetic`: five components whose quoted smiles come from mildly
//! skewed diffusive curves plus the shared jump `(0.25, -0.16, 0.18)` with
//! `sigma0 = 0.18, kappa = 1`, and an index whose smile is the copula basket
//! price under the same tuple at the default tuple-calibration Monte Carlo
//! settings. `steep_skew`: one asset, vols falling linearly from 0.32 to 0.18
//! between 70% and 130% of the forward.
//!
//! Usage: cargo run --release -p jumpcopula --example generate_fixtures -- <fixtures dir>

use std::path::PathBuf;

use jumpcopula::calibration::{diffusive_correlation_for_curves, TupleConfig};
use jumpcopula::copula::implied_basket_vol_curve;
use jumpcopula::io::{write_bundle, MarketBundle, MaturityData};
use jumpcopula::VolSurfaceSlice;
use jumpcopula::{
    implied_vol, merton_call_extended, merton_copula_basket, CopulaBasket, DiffusiveVolCurve, JumpParams,
};
use nalgebra::DMatrix;

const IDS: [&str; 5] = ["A1", "A2", "A3", "A4", "A5"];
const SPOTS: [f64; 5] = [100.0, 55.0, 80.0, 140.0, 35.0];
const CARRY: [f64; 5] = [0.01, 0.0, 0.015, 0.005, -0.01];
const ATM: [f64; 5] = [0.22, 0.26, 0.20, 0.24, 0.30];
const SLOPE: [f64; 5] = [-0.03, -0.035, -0.025, -0.03, -0.04];
const MATURITIES: [f64; 3] = [0.5, 1.0, 2.0];
const RATE: f64 = 0.03;

fn component_moneyness() -> Vec<f64> {
    (0..11).map(|i| 0.5 + 0.1 * i as f64).collect()
}

fn index_moneyness() -> Vec<f64> {
    (0..17).map(|i| 0.6 + 0.05 * i as f64).collect()
}

fn total_correlation() -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.45 + 0.05 * ((i + j) % 4) as f64 })
}

fn dax(jp: &JumpParams) -> MarketBundle {
    let weights: Vec<f64> = SPOTS.iter().map(|s| 20.0 / s).collect();
    let rho_total = total_correlation();
    let mut maturities = Vec::new();
    for &t in &MATURITIES {
        let discount = (-RATE * t).exp();
        let forwards: Vec<f64> = SPOTS.iter().zip(CARRY).map(|(s, c)| s * ((RATE - c) * t).exp()).collect();
        let mut curves = Vec::new();
        let mut slices = Vec::new();
        for i in 0..5 {
            let strikes: Vec<f64> = component_moneyness().iter().map(|m| m * forwards[i]).collect();
            let sigma = component_moneyness().iter().map(|m| ATM[i] + SLOPE[i] * m.ln()).collect();
            let curve = DiffusiveVolCurve::new(strikes.clone(), sigma).unwrap();
            let vols = strikes
                .iter()
                .map(|&k| {
                    let p = merton_call_extended(forwards[i], t, k, &curve, discount, jp).unwrap();
                    implied_vol(p, forwards[i], t, k, discount).unwrap()
                })
                .collect();
            slices.push(VolSurfaceSlice::new(IDS[i], t, forwards[i], discount, strikes, vols).unwrap());
            curves.push(curve);
        }
        let rho = diffusive_correlation_for_curves(&rho_total, &forwards, &curves, jp).unwrap();
        let basket = CopulaBasket {
            asset_ids: IDS.iter().map(|s| s.to_string()).collect(),
            forwards: forwards.clone(),
            curves,
            weights: weights.clone(),
            maturity: t,
            discount,
        };
        let fwd = basket.basket_forward();
        let strikes: Vec<f64> = index_moneyness().iter().map(|m| m * fwd).collect();
        let mc = TupleConfig::default().mc;
        let prices = merton_copula_basket(&basket, &strikes, &rho, jp, &mc).unwrap();
        let iv = implied_basket_vol_curve(&strikes, &prices.prices, fwd, discount, t).unwrap();
        let vols = iv.vols.iter().map(|v| v.expect("index price inside arbitrage bounds")).collect();
        let index = VolSurfaceSlice::new("IDX", t, fwd, discount, strikes, vols).unwrap();
        maturities.push(MaturityData { maturity: t, discount, forwards, slices, index: Some(index) });
    }
    MarketBundle {
        name: "dax_synthetic".into(),
        asset_ids: IDS.iter().map(|s| s.to_string()).collect(),
        weights,
        maturities,
        correlation: rho_total,
        index_id: Some("IDX".into()),
        jump: Some(*jp),
        checksums: Default::default(),
    }
}

fn steep() -> MarketBundle {
    let (f, t) = (100.0, 1.0);
    let discount = (-RATE * t).exp();
    let strikes: Vec<f64> = (0..7).map(|i| f * (0.7 + 0.1 * i as f64)).collect();
    let vols = (0..7).map(|i| 0.32 - 0.14 * i as f64 / 6.0).collect();
    let slice = VolSurfaceSlice::new("STEEP", t, f, discount, strikes, vols).unwrap();
    MarketBundle {
        name: "steep_skew".into(),
        asset_ids: vec!["STEEP".into()],
        weights: vec![1.0],
        maturities: vec![MaturityData { maturity: t, discount, forwards: vec![f], slices: vec![slice], index: None }],
        correlation: DMatrix::identity(1, 1),
        index_id: None,
        jump: Some(JumpParams::new(0.25, -0.16, 0.18, 0.18, 1.0).unwrap()),
        checksums: Default::default(),
    }
}

fn main() {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    let jp = JumpParams::new(0.25, -0.16, 0.18, 0.18, 1.0).unwrap();
    write_bundle(&dax(&jp), &root.join("dax_synthetic")).unwrap();
    write_bundle(&steep(), &root.join("steep_skew")).unwrap();
    println!("wrote bundles under {}", root.display());
}
