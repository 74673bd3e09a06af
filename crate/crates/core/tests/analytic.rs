mod common;

use common::{integrate, lognormal_expectation, std_pdf};
use jumpcopula::black_scholes::{bs_call, bs_digital_put, bs_put, implied_vol};
use proptest::prelude::*;

#[test]
fn atm_call_matches_quadrature() {
    let oracle = lognormal_expectation(100.0, 1.0, 0.2, |s| (s - 100.0).max(0.0));
    let price = bs_call(100.0, 1.0, 100.0, 0.2, 1.0).unwrap();
    assert!((price - oracle).abs() < 1e-9, "{price} vs {oracle}");
    // scipy: 100*norm.cdf(0.1) - 100*norm.cdf(-0.1)
    assert!((price - 7.965567455405842).abs() < 1e-12);
}

#[test]
fn digital_put_matches_quadrature() {
    let (f, k, vol) = (100.0f64, 80.0, 0.25);
    // exercise when z < z*, with S = F exp(vol z - vol^2/2)
    let z_star = ((k / f).ln() + 0.5 * vol * vol) / vol;
    let oracle = integrate(&std_pdf, -12.0, z_star, 1e-14);
    let price = bs_digital_put(f, 1.0, k, vol, 1.0).unwrap();
    assert!((price - oracle).abs() < 1e-10, "{price} vs {oracle}");
    // scipy: norm.cdf((log(0.8) + 0.03125) / 0.25)
    assert!((price - 0.22137009599489735).abs() < 1e-12);
}

#[test]
fn discounted_off_the_money_call_matches_quadrature() {
    let (f, t, k, vol, df) = (100.0, 2.0, 80.0, 0.35, 0.97);
    let oracle = df * lognormal_expectation(f, t, vol, |s| (s - k).max(0.0));
    let price = bs_call(f, t, k, vol, df).unwrap();
    assert!((price - oracle).abs() < 1e-9);
    assert!((implied_vol(price, f, t, k, df).unwrap() - vol).abs() < 1e-8);
}

proptest! {
    #[test]
    fn parity_and_monotonicity(
        f in 10.0f64..500.0,
        m in 0.3f64..3.0,
        t in 0.05f64..5.0,
        vol in 0.01f64..1.5,
        df in 0.5f64..=1.0,
    ) {
        let k = m * f;
        let c = bs_call(f, t, k, vol, df).unwrap();
        let p = bs_put(f, t, k, vol, df).unwrap();
        prop_assert!((c - p - df * (f - k)).abs() <= 1e-12 * f.max(k));
        prop_assert!(bs_call(f, t, k, vol * 1.01, df).unwrap() >= c);
        prop_assert!(bs_call(f * 1.01, t, k, vol, df).unwrap() >= c);
        prop_assert!(bs_call(f, t, k * 1.01, vol, df).unwrap() <= c);
        let dp = bs_digital_put(f, t, k, vol, df).unwrap();
        prop_assert!((0.0..=df).contains(&dp));
        prop_assert!(bs_digital_put(f, t, k * 1.01, vol, df).unwrap() >= dp);
    }

    #[test]
    fn implied_vol_inverts_call(
        m in 0.7f64..1.4,
        t in 0.1f64..3.0,
        vol in 0.01f64..2.0,
    ) {
        let (f, df) = (100.0, 0.98);
        let k = m * f;
        let c = bs_call(f, t, k, vol, df).unwrap();
        // far from the money a tiny vol leaves no time value to invert
        prop_assume!(c - df * (f - k).max(0.0) > 1e-10 * f);
        let v = implied_vol(c, f, t, k, df).unwrap();
        prop_assert!((v - vol).abs() < 1e-8, "vol {vol} recovered as {v}");
    }
}
