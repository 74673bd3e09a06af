//! Nelder–Mead on the unit box. Trial points are projected onto the box, so
//! the objective is never evaluated outside it.

use std::cell::Cell;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelderMeadConfig {
    /// Edge length of the initial simplex, in box units.
    pub initial_step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub x_tolerance: f64,
    /// Stop once objective values across the simplex differ by less than this.
    pub f_tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self { initial_step: 0.25, x_tolerance: 1e-4, f_tolerance: 1e-12, max_evaluations: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0, 1]^d` starting from `x0`. NaN values count as `+inf`.
pub fn minimize_in_box<F>(f: F, x0: &[f64], cfg: &NelderMeadConfig) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let evaluations = Cell::new(0usize);
    let eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let f0 = eval(&start);
    if d == 0 {
        return NelderMeadResult {
            x: start,
            value: f0,
            iterations: 0,
            evaluations: evaluations.get(),
            converged: true,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f0)];
    for i in 0..d {
        let mut v = start.clone();
        // step away from the nearer face so the vertex stays distinct after projection
        v[i] += if start[i] + cfg.initial_step <= 1.0 { cfg.initial_step } else { -cfg.initial_step };
        project(&mut v);
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let spread = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&best.0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0f64, f64::max);
        let f_range = simplex[d].1 - best.1;
        if spread <= cfg.x_tolerance || (f_range.is_finite() && f_range <= cfg.f_tolerance) {
            converged = true;
            break;
        }
        if evaluations.get() >= cfg.max_evaluations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[d].1 {
            let x = along(rho * alpha);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-rho);
            let v = eval(&x);
            (x, v)
        };
        if fc < fr.min(simplex[d].1) {
            simplex[d] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
            project(&mut x);
            let fx = eval(&x);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult { x, value, iterations, evaluations: evaluations.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        let target = [0.3, 0.7, 0.55];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let cfg = NelderMeadConfig { x_tolerance: 1e-8, f_tolerance: 0.0, max_evaluations: 2000, ..Default::default() };
        let r = minimize_in_box(f, &[0.5, 0.5, 0.5], &cfg);
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn stays_in_box() {
        let f = |x: &[f64]| {
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            (x[0] + 2.0).powi(2) + (x[1] - 0.5).powi(2)
        };
        let r = minimize_in_box(f, &[0.9, 0.1], &NelderMeadConfig::default());
        assert!(r.x[0] < 1e-3);
        assert!((r.x[1] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rosenbrock() {
        // scaled so the minimum (1, 1) sits at (0.5, 0.5)
        let f = |x: &[f64]| {
            let (a, b) = (4.0 * x[0] - 1.0, 4.0 * x[1] - 1.0);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let cfg = NelderMeadConfig { x_tolerance: 1e-9, f_tolerance: 0.0, max_evaluations: 5000, ..Default::default() };
        let r = minimize_in_box(f, &[0.2, 0.6], &cfg);
        assert!((r.x[0] - 0.5).abs() < 1e-4 && (r.x[1] - 0.5).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] > 0.6 { f64::INFINITY } else { (x[0] - 0.5).powi(2) };
        let r = minimize_in_box(f, &[0.1], &NelderMeadConfig::default());
        assert!((r.x[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn zero_dimensional() {
        let r = minimize_in_box(|_| 3.0, &[], &NelderMeadConfig::default());
        assert_eq!(r.value, 3.0);
        assert_eq!(r.evaluations, 1);
    }
}
