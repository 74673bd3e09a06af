#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Adaptive Simpson quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Expectation of `g(S_T)` for a driftless lognormal with forward `f`,
/// integrated over the standard normal driver.
pub fn lognormal_expectation<G: Fn(f64) -> f64>(f: f64, t: f64, vol: f64, g: G) -> f64 {
    let sd = vol * t.sqrt();
    let h = |z: f64| g(f * (sd * z - 0.5 * sd * sd).exp()) * std_pdf(z);
    integrate(&h, -12.0, 12.0, 1e-13)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard normal pairs by Box-Muller over the rand crate's uniforms.
pub struct Normals {
    rng: rand_chacha::ChaCha20Rng,
    spare: Option<f64>,
}

impl Normals {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self { rng: rand_chacha::ChaCha20Rng::seed_from_u64(seed), spare: None }
    }

    pub fn next(&mut self) -> f64 {
        use rand::Rng;
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = 2.0 * PI * u2;
        self.spare = Some(r * a.sin());
        r * a.cos()
    }
}
