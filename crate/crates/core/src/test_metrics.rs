//! Two-bubble competitor weights w_eps = (beta^2 - 1)/|beta - z|^2 +
//! (beta^2 - 1)/|beta + z|^2 on the circle, beta = (1 + eps)/(1 - eps), their
//! low spectrum and trial-function upper bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{h_value, FunctionalParams};
use crate::steklov::{solve_spectrum, Block, BoundaryWeight};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFamilyPoint {
    pub epsilon: f64,
    pub beta: f64,
    pub weight: BoundaryWeight,
}

pub fn beta_of(eps: f64) -> f64 {
    (1.0 + eps) / (1.0 - eps)
}

/// Closed-form boundary value of the two-bubble weight.
pub fn omega_eps_value(eps: f64, theta: f64) -> f64 {
    let beta = beta_of(eps);
    let b2 = beta * beta - 1.0;
    let (c, s) = (theta.cos(), theta.sin());
    b2 / ((beta - c).powi(2) + s * s) + b2 / ((beta + c).powi(2) + s * s)
}

/// Smallest truncation admitted for eps: N >= 8/eps.
pub fn min_resolution(eps: f64) -> usize {
    (8.0 / eps - 1e-9).ceil() as usize
}

pub fn omega_eps_weight(eps: f64, n: usize) -> Result<TestFamilyPoint> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1)")));
    }
    if n < min_resolution(eps) {
        return Err(Error::Resolution(format!("N = {n} below 8/eps = {}", min_resolution(eps))));
    }
    let weight = BoundaryWeight::from_fn(|t| omega_eps_value(eps, t), 2 * n)?;
    let l = weight.length();
    if (l - 4.0 * PI).abs() > 1e-9 {
        return Err(Error::Resolution(format!("total length {l} differs from 4 pi")));
    }
    Ok(TestFamilyPoint { epsilon: eps, beta: beta_of(eps), weight })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub epsilon: f64,
    pub n_modes: usize,
    pub length: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_bar_1: f64,
    pub sigma_bar_2: f64,
    pub block_1: Option<Block>,
    pub block_2: Option<Block>,
    /// set when the point could not be resolved
    pub failure: Option<String>,
}

impl FamilyRow {
    /// sigmabar_1 ln(1/eps) / (2 pi)
    pub fn sigma1_scaled(&self) -> f64 {
        self.sigma_bar_1 * (1.0 / self.epsilon).ln() / (2.0 * PI)
    }

    /// (4 pi - sigmabar_2) / eps
    pub fn sigma2_defect(&self) -> f64 {
        (4.0 * PI - self.sigma_bar_2) / self.epsilon
    }
}

pub fn family_row(eps: f64, n: usize) -> FamilyRow {
    let solved = omega_eps_weight(eps, n).and_then(|pt| {
        let spec = solve_spectrum(&pt.weight, n, 4)?;
        Ok((pt, spec))
    });
    match solved {
        Ok((pt, spec)) => FamilyRow {
            epsilon: eps,
            n_modes: n,
            length: pt.weight.length(),
            sigma_1: spec.sigmas[1],
            sigma_2: spec.sigmas[2],
            sigma_bar_1: spec.normalized(1),
            sigma_bar_2: spec.normalized(2),
            block_1: spec.blocks[1],
            block_2: spec.blocks[2],
            failure: None,
        },
        Err(e) => FamilyRow {
            epsilon: eps,
            n_modes: n,
            length: f64::NAN,
            sigma_1: f64::NAN,
            sigma_2: f64::NAN,
            sigma_bar_1: f64::NAN,
            sigma_bar_2: f64::NAN,
            block_1: None,
            block_2: None,
            failure: Some(e.to_string()),
        },
    }
}

/// One row per eps at the minimal admissible truncation.
pub fn family_spectra(eps_grid: &[f64]) -> Vec<FamilyRow> {
    eps_grid.iter().map(|&e| family_row(e, min_resolution(e).max(16))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma1Report {
    pub rows: Vec<FamilyRow>,
    /// sigmabar_1 ln(1/eps) = c_inf + c_corr / ln(1/eps), when two or more
    /// points resolved
    pub fit: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Report {
    pub rows: Vec<FamilyRow>,
    /// least-squares slope of sigmabar_2 - 4 pi against eps
    pub slope: Option<f64>,
}

pub fn sigma1_fit(rows: &[FamilyRow]) -> Sigma1Report {
    let ok: Vec<&FamilyRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let fit = (ok.len() >= 2).then(|| {
        // y = c0 + c1 x with x = 1/ln(1/eps)
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .map(|r| {
                let l = (1.0 / r.epsilon).ln();
                (1.0 / l, r.sigma_bar_1 * l)
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let c1 = sxy / sxx;
        (my - c1 * mx, c1)
    });
    Sigma1Report { rows: rows.to_vec(), fit }
}

pub fn sigma2_fit(rows: &[FamilyRow]) -> Sigma2Report {
    let ok: Vec<&FamilyRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let slope = (!ok.is_empty()).then(|| {
        let num: f64 = ok.iter().map(|r| r.epsilon * (r.sigma_bar_2 - 4.0 * PI)).sum();
        let den: f64 = ok.iter().map(|r| r.epsilon * r.epsilon).sum();
        num / den
    });
    Sigma2Report { rows: rows.to_vec(), slope }
}

pub fn asymptotics_sigma1(eps_grid: &[f64]) -> Sigma1Report {
    sigma1_fit(&family_spectra(eps_grid))
}

pub fn asymptotics_sigma2(eps_grid: &[f64]) -> Sigma2Report {
    sigma2_fit(&family_spectra(eps_grid))
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
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
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Log cutoff trial: 1 on the arc |theta| < 2 atan(eps), -1 on its antipode,
/// ln|tan(theta/2)|/ln(eps) in between.
pub fn f1_trace(eps: f64, theta: f64) -> f64 {
    ((theta / 2.0).tan().abs().ln() / eps.ln()).clamp(-1.0, 1.0)
}

/// sqrt(beta^2 - 1) sin(theta) / |beta - e^{i theta}|^2
pub fn f2_trace(eps: f64, theta: f64) -> f64 {
    let beta = beta_of(eps);
    let (c, s) = (theta.cos(), theta.sin());
    (beta * beta - 1.0).sqrt() * s / ((beta - c).powi(2) + s * s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighBounds {
    pub epsilon: f64,
    pub energy_f1: f64,
    pub norm_f1: f64,
    pub energy_f2: f64,
    pub norm_f2: f64,
    pub rq_f1: f64,
    pub rq_f2: f64,
}

impl RayleighBounds {
    /// Upper bound for sigma_2 from the two-dimensional trial space: f1 and
    /// f2 are orthogonal to constants and to each other in both forms.
    pub fn sigma2_bound(&self) -> f64 {
        self.rq_f1.max(self.rq_f2)
    }
}

/// int_0^{2 pi} g^2 w for g^2 even in y.
fn boundary_norm(eps: f64, g: impl Fn(f64) -> f64) -> f64 {
    let f = |t: f64| {
        let v = g(t);
        v * v * omega_eps_value(eps, t)
    };
    let kink = 2.0 * eps.atan();
    // both bubbles have width ~ eps: geometric cuts away from 0 and pi
    let mut half = vec![0.0, kink];
    while 2.0 * half[half.len() - 1] < PI / 2.0 {
        let next = 2.0 * half[half.len() - 1];
        half.push(next);
    }
    half.push(PI / 2.0);
    let mut cuts = half.clone();
    cuts.extend(half.iter().rev().skip(1).map(|c| PI - c));
    let tol = 1e-12;
    2.0 * cuts.windows(2).map(|c| adaptive_simpson(&f, c[0], c[1], tol)).sum::<f64>()
}

pub fn rayleigh_upper_bounds(eps: f64) -> Result<RayleighBounds> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1)")));
    }
    let energy_f1 = 2.0 * PI / (1.0 / eps).ln();
    let norm_f1 = boundary_norm(eps, |t| f1_trace(eps, t));
    // f2 = sqrt(beta^2 - 1) sum_k beta^{-k-1} sin k theta, energy pi sum k b_k^2
    let beta = beta_of(eps);
    let r = 1.0 / beta;
    let mut energy_f2 = 0.0;
    let mut k = 1.0;
    let mut rk = r * r;
    loop {
        let term = PI * k * (beta * beta - 1.0) * rk * rk;
        energy_f2 += term;
        if term < 1e-18 * energy_f2 {
            break;
        }
        k += 1.0;
        rk *= r;
    }
    let norm_f2 = boundary_norm(eps, |t| f2_trace(eps, t));
    Ok(RayleighBounds {
        epsilon: eps,
        energy_f1,
        norm_f1,
        energy_f2,
        norm_f2,
        rq_f1: energy_f1 / norm_f1,
        rq_f2: energy_f2 / norm_f2,
    })
}

/// (E(w_eps), t^{1/s}/(4 pi)); for s < 0 the first below the second
/// witnesses that the infimum is below the bubbling level.
pub fn bubbling_witness(params: &FunctionalParams, row: &FamilyRow) -> Result<(f64, f64)> {
    let e = h_value(params, row.sigma_bar_1, row.sigma_bar_2)?;
    Ok((e, params.t.powf(1.0 / params.s) / (4.0 * PI)))
}
