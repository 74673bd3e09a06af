mod common;

use common::{fixture, mean_and_se, Normals};
use jumpcopula::basket::implied_flat_correlation;
use jumpcopula::calibration::{diffusive_correlation_for_curves, diffusive_correlation_matrix};
use jumpcopula::io::load_bundle;
use jumpcopula::linalg::flat_correlation;
use jumpcopula::{
    basket_moments, fixed_point_diffusive_vol, implied_vol, merton_basket_call, merton_basket_calls, merton_call,
    tm_pricer, BasketSpec, FixedPointConfig, JumpParams,
};
use nalgebra::DMatrix;

fn spec(forwards: &[f64], vols: &[f64], weights: &[f64], rho: DMatrix<f64>) -> BasketSpec {
    let ids = (0..forwards.len()).map(|i| format!("S{i}")).collect();
    BasketSpec::new(ids, weights.to_vec(), forwards.to_vec(), vols.to_vec(), rho, 1.0, 1.0).unwrap()
}

/// Terminal basket values of jointly lognormal assets.
fn simulate_basket(s: &BasketSpec, n_paths: usize, seed: u64) -> Vec<f64> {
    let n = s.len();
    let chol = s.correlation.clone().cholesky().expect("positive definite test correlation").l();
    let sqrt_t = s.maturity.sqrt();
    let mut normals = Normals::new(seed);
    let mut z = vec![0.0; n];
    (0..n_paths)
        .map(|_| {
            z.iter_mut().for_each(|x| *x = normals.next());
            (0..n)
                .map(|i| {
                    let w: f64 = (0..=i).map(|j| chol[(i, j)] * z[j]).sum();
                    let sd = s.vols[i] * sqrt_t;
                    s.weights[i] * s.forwards[i] * (sd * w - 0.5 * sd * sd).exp()
                })
                .sum()
        })
        .collect()
}

#[test]
fn five_asset_atm_price_matches_joint_lognormal_simulation() {
    let s = spec(
        &[100.0, 50.0, 80.0, 120.0, 60.0],
        &[0.15, 0.2, 0.25, 0.3, 0.35],
        &[0.2, 0.4, 0.25, 0.15, 0.3],
        flat_correlation(5, 0.5),
    );
    let k = s.basket_forward();
    let b = simulate_basket(&s, 1_000_000, 17);
    let (mc, _) = mean_and_se(&b.iter().map(|x| (x - k).max(0.0)).collect::<Vec<_>>());
    let tm = tm_pricer(&s, k).unwrap();
    assert!((tm - mc).abs() < 0.005 * mc, "{tm} vs {mc}");
}

#[test]
fn moments_match_sample_moments() {
    let cases = [
        (vec![100.0, 80.0], vec![0.2, 0.4], vec![1.0, 0.5], 0.3),
        (vec![100.0, 50.0, 70.0], vec![0.1, 0.25, 0.3], vec![0.3, 1.0, -0.2], -0.2),
        (vec![90.0, 110.0, 100.0, 40.0], vec![0.3, 0.2, 0.15, 0.45], vec![0.25; 4], 0.6),
        (vec![100.0; 6], vec![0.1, 0.15, 0.2, 0.25, 0.3, 0.35], vec![1.0 / 6.0; 6], 0.4),
    ];
    for (c, (f, v, w, rho)) in cases.into_iter().enumerate() {
        let s = spec(&f, &v, &w, flat_correlation(f.len(), rho));
        let raw = basket_moments(&s).raw();
        let b = simulate_basket(&s, 400_000, 100 + c as u64);
        for (m, &exact) in raw.iter().enumerate() {
            let (mean, se) = mean_and_se(&b.iter().map(|x| x.powi(m as i32 + 1)).collect::<Vec<_>>());
            assert!((mean - exact).abs() < 3.0 * se, "case {c} moment {}: {exact} vs {mean} +- {se}", m + 1);
        }
    }
}

fn atm_vol(sigma: f64, jp: &JumpParams) -> f64 {
    implied_vol(merton_call(100.0, 1.0, 100.0, sigma, 1.0, jp).unwrap(), 100.0, 1.0, 100.0, 1.0).unwrap()
}

/// Diffusive vol whose Merton ATM implied vol is `target`.
fn diffusive_for_atm(target: f64, jp: &JumpParams) -> f64 {
    let (mut lo, mut hi) = (0.01, target);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if atm_vol(mid, jp) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn held_total_correlation_survives_in_atm_basket_price() {
    let market = [0.2, 0.25, 0.3, 0.22];
    let weights = [0.25; 4];
    let forwards = [100.0; 4];
    let target = 0.5;
    let rho_total = flat_correlation(4, target);
    for lambda in [0.0, 0.1, 0.25, 0.5] {
        let jp = JumpParams::new(lambda, -0.16, 0.0, 0.18, 1.0).unwrap();
        let sigmas: Vec<f64> = market.iter().map(|&v| diffusive_for_atm(v, &jp)).collect();
        let x: Vec<f64> = sigmas.iter().map(|&s| jp.jump_for_vol(s).unwrap() / s).collect();
        let rho = diffusive_correlation_matrix(&rho_total, lambda, &x).unwrap();
        let model = spec(&forwards, &sigmas, &weights, rho);
        let price = merton_basket_call(&model, 100.0, &jp).unwrap();
        let quoted = spec(&forwards, &market, &weights, flat_correlation(4, 0.0));
        let implied = implied_flat_correlation(&quoted, 100.0, price).unwrap();
        assert!((implied - target).abs() < 0.01, "lambda {lambda}: implied correlation {implied}");
    }
}

#[test]
fn shared_jumps_steepen_the_fixture_basket_skew() {
    let bundle = load_bundle(&fixture("dax_synthetic")).unwrap();
    let jp = bundle.jump.unwrap();
    let mat = bundle.maturity(1.0).unwrap();
    let fwd = mat.basket_forward(&bundle.weights);
    let strikes = [0.8 * fwd, 1.2 * fwd];
    let spread = |s: &BasketSpec, jp: &JumpParams| {
        let p = merton_basket_calls(s, &strikes, jp).unwrap();
        let iv = |i: usize| implied_vol(p[i], fwd, mat.maturity, strikes[i], mat.discount).unwrap();
        iv(0) - iv(1)
    };
    let ids = bundle.asset_ids.clone();
    let curves: Vec<_> =
        mat.slices.iter().map(|s| fixed_point_diffusive_vol(s, &jp, &FixedPointConfig::default()).unwrap().0).collect();
    let sigmas: Vec<f64> = curves.iter().zip(&mat.forwards).map(|(c, &f)| c.eval(f)).collect();
    let rho = diffusive_correlation_for_curves(&bundle.correlation, &mat.forwards, &curves, &jp).unwrap();
    let with_jumps = BasketSpec::new(
        ids.clone(),
        bundle.weights.clone(),
        mat.forwards.clone(),
        sigmas,
        rho,
        mat.maturity,
        mat.discount,
    )
    .unwrap();
    let atm: Vec<f64> = mat.slices.iter().map(|s| s.atm_vol()).collect();
    let baseline = BasketSpec::new(
        ids,
        bundle.weights.clone(),
        mat.forwards.clone(),
        atm,
        bundle.correlation.clone(),
        mat.maturity,
        mat.discount,
    )
    .unwrap();
    let jump_spread = spread(&with_jumps, &jp);
    let base_spread = spread(&baseline, &JumpParams::none());
    assert!(jump_spread > 0.0, "jump spread {jump_spread}");
    assert!(jump_spread >= 1.5 * base_spread, "jump spread {jump_spread} vs baseline {base_spread}");
}
