#![allow(dead_code)]

pub mod eigen_oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov_core::trig::TrigSeries;
use steklov_core::BoundaryWeight;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// v = sum c_k cos 2k theta with c_k ~ U(-amp, amp) / k.
pub fn random_log_series(rng: &mut impl Rng, modes: usize, amp: f64) -> TrigSeries {
    let mut a = vec![0.0; 2 * modes + 1];
    for k in 1..=modes {
        a[2 * k] = rng.gen_range(-amp..amp) / k as f64;
    }
    TrigSeries::cosine(a)
}

/// Positive even_both weight e^v of degree 4 * modes.
pub fn random_weight(rng: &mut impl Rng, modes: usize, amp: f64) -> BoundaryWeight {
    let v = random_log_series(rng, modes, amp);
    BoundaryWeight::from_log(&v, 8 * modes).unwrap()
}

pub fn weight_from_log_coeffs(c: &[f64]) -> BoundaryWeight {
    let mut a = vec![0.0; 2 * c.len() + 1];
    for (k, v) in c.iter().enumerate() {
        a[2 * (k + 1)] = *v;
    }
    BoundaryWeight::from_log(&TrigSeries::cosine(a), 8 * c.len().max(1)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub struct SubgradientCheck {
    pub fd: f64,
    pub analytic: f64,
    pub gap: f64,
}

/// Central difference of E along v -> v + h dv against int psi dv w, at
/// random weights with simple sigma_1 and sigma_2.
pub fn subgradient_checks(seed: u64, count: usize, params: &steklov_core::FunctionalParams) -> Vec<SubgradientCheck> {
    use steklov_core::functional::{directional_derivative, evaluate_e, subgradient};
    let n = 64;
    let h = 1e-5;
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let v = random_log_series(&mut r, 3, 0.6);
        let dv = random_log_series(&mut r, 3, 1.0);
        let w = BoundaryWeight::from_log(&v, 32).unwrap();
        let (_, spec) = evaluate_e(&w, params, n).unwrap();
        let s = &spec.sigmas;
        let gap = ((s[2] - s[1]) / s[2]).min((s[3] - s[2]) / s[3]);
        if gap <= 1e-4 {
            continue;
        }
        let shifted = |c: f64| {
            let mut a = v.cos_coeffs.clone();
            a.iter_mut().zip(&dv.cos_coeffs).for_each(|(x, y)| *x += c * y);
            let wv = BoundaryWeight::from_log(&TrigSeries::cosine(a), 32).unwrap();
            evaluate_e(&wv, params, n).unwrap().0
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let sub = subgradient(&w, &spec, params).unwrap();
        out.push(SubgradientCheck { fd, analytic: directional_derivative(&w, &sub, &dv), gap });
    }
    out
}

/// The s = 1 starting weight used for the optimizer runs.
pub fn initial_weight() -> BoundaryWeight {
    BoundaryWeight::from_fn(|t| 1.0 + 0.2 * (2.0 * t).cos(), 8).unwrap()
}

pub fn minimize_s1(
    t: f64,
    config: &steklov_core::optimizer::OptimizerConfig,
) -> steklov_core::optimizer::OptimizationResult {
    let params = steklov_core::FunctionalParams::new(1.0, t).unwrap();
    steklov_core::optimizer::minimize(&params, config, &initial_weight()).unwrap()
}
