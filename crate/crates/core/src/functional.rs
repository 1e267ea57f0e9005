//! The objective h_{s,t}(a, b) = (a^{-s} + t b^{-s})^{1/s}, its value on
//! spectra, the eigenvalue subgradient and the planar/non-planar phase logic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steklov::{solve_spectrum, weighted_inner, BoundaryWeight, SteklovSpectrum};
use crate::trig::{project_samples, QuadratureGrid, TrigSeries};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams {
    pub s: f64,
    pub t: f64,
}

impl FunctionalParams {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("s must be a nonzero real, got {s}")));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        Ok(FunctionalParams { s, t })
    }

    /// a^{-s} + t b^{-s}
    pub fn f_value(&self, a: f64, b: f64) -> f64 {
        a.powf(-self.s) + self.t * b.powf(-self.s)
    }

    /// The two mass fractions a^{-s}/f and t b^{-s}/f of a critical metric.
    pub fn mass_fractions(&self, a: f64, b: f64) -> (f64, f64) {
        let f = self.f_value(a, b);
        (a.powf(-self.s) / f, self.t * b.powf(-self.s) / f)
    }
}

pub fn h_value(params: &FunctionalParams, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("eigenvalues must be positive, got ({a}, {b})")));
    }
    Ok(params.f_value(a, b).powf(1.0 / params.s))
}

/// (d_1, d_2) = (dh/da, dh/db), both non-positive.
pub fn h_partials(params: &FunctionalParams, a: f64, b: f64) -> (f64, f64) {
    let s = params.s;
    let g = params.f_value(a, b).powf(1.0 / s - 1.0);
    (-g * a.powf(-s - 1.0), -g * params.t * b.powf(-s - 1.0))
}

/// E(w) = h(sigmabar_1, sigmabar_2) with the solved spectrum.
pub fn evaluate_e(weight: &BoundaryWeight, params: &FunctionalParams, n: usize) -> Result<(f64, SteklovSpectrum)> {
    let spec = solve_spectrum(weight, n, 8.min(n.saturating_sub(4)).max(2))?;
    let e = h_value(params, spec.normalized(1), spec.normalized(2))?;
    Ok((e, spec))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgradientDirection {
    /// psi = sum_i d_i sigmabar_i (1/L - phi_i^2)
    pub direction: TrigSeries,
    pub d_coeffs: (f64, f64),
}

/// Subdifferential element with multiplets replaced by the average of phi^2
/// over a w-orthonormal basis of the eigenspace.
pub fn subgradient(
    weight: &BoundaryWeight,
    spectrum: &SteklovSpectrum,
    params: &FunctionalParams,
) -> Result<SubgradientDirection> {
    if spectrum.sigmas.len() < 3 {
        return Err(Error::Stale("need at least sigma_0, sigma_1, sigma_2".into()));
    }
    let l = weight.length();
    if (spectrum.boundary_length - l).abs() > 1e-10 * l {
        return Err(Error::Stale("spectrum was computed for a different weight".into()));
    }
    let (a, b) = (spectrum.normalized(1), spectrum.normalized(2));
    let (d1, d2) = h_partials(params, a, b);
    let n = spectrum.n_modes;
    let grid = QuadratureGrid::for_degree(2 * n);
    let mut psi = vec![0.0; grid.n_points];
    for (i, di) in [(1usize, d1), (2, d2)] {
        let members = spectrum.multiplet(i);
        if members.len() > 1 && *members.last().unwrap() == spectrum.sigmas.len() - 1 {
            // the eigenspace may extend past the computed range
            return Err(Error::Stale("multiplet reaches the last computed eigenpair; raise k_max".into()));
        }
        let mut avg = vec![0.0; grid.n_points];
        for &j in &members {
            let v = spectrum.eigen_traces[j].grid_values(grid.n_points);
            avg.iter_mut().zip(&v).for_each(|(x, y)| *x += y * y / members.len() as f64);
        }
        let sb = spectrum.normalized(i);
        psi.iter_mut().zip(&avg).for_each(|(p, q)| *p += di * sb * (1.0 / l - q));
    }
    Ok(SubgradientDirection { direction: project_samples(&psi, 2 * n)?, d_coeffs: (d1, d2) })
}

/// First variation of E along v -> v + dv: int psi dv w dtheta.
pub fn directional_derivative(weight: &BoundaryWeight, sub: &SubgradientDirection, dv: &TrigSeries) -> f64 {
    weighted_inner(&sub.direction, dv, &weight.density)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// flat disk cannot minimize, planar ellipse not excluded
    FlatExcluded,
    /// elongated planar ellipse cannot minimize, flat disk not excluded
    ElongatedEllipseExcluded,
    /// both planar candidates excluded
    NonplanarForced,
    Inconclusive,
}

/// Planar exclusion logic: s > 0 and t > theta_star^s, or s < 0 and
/// t >= 1/(2^{-s} - 1), force a non-planar minimizer.
pub fn phase_classify(params: &FunctionalParams, theta_star: f64) -> Result<Phase> {
    if !(theta_star > 1.0 && theta_star <= 4.0) {
        return Err(Error::Domain(format!("theta_star = {theta_star} outside (1, 4]")));
    }
    let (s, t) = (params.s, params.t);
    Ok(if s > 0.0 {
        if t > theta_star.powf(s) {
            Phase::NonplanarForced
        } else if t > 1.0 {
            Phase::FlatExcluded
        } else {
            Phase::Inconclusive
        }
    } else if t >= 1.0 / (2f64.powf(-s) - 1.0) {
        Phase::NonplanarForced
    } else {
        Phase::ElongatedEllipseExcluded
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn h_examples() {
        let p = FunctionalParams::new(1.0, 1.0).unwrap();
        assert!((h_value(&p, 2.0 * PI, 2.0 * PI).unwrap() - 1.0 / PI).abs() < 1e-15);
        let q = FunctionalParams::new(-1.0, 1.0).unwrap();
        assert!((h_value(&q, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        for t in [2.0, 5.0, 8.0] {
            let p = FunctionalParams::new(1.0, t).unwrap();
            let v = h_value(&p, 2.0 * PI / t.sqrt(), 2.0 * PI * t.sqrt()).unwrap();
            assert!((v - 2.0 * t.sqrt() / (2.0 * PI)).abs() < 1e-14);
        }
        assert!(h_value(&p, 0.0, 1.0).is_err());
        assert!(FunctionalParams::new(0.0, 1.0).is_err());
        assert!(FunctionalParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn phase_examples() {
        let c = |s, t| phase_classify(&FunctionalParams::new(s, t).unwrap(), 4.0).unwrap();
        assert_eq!(c(1.0, 5.0), Phase::NonplanarForced);
        assert_eq!(c(-1.0, 1.0), Phase::NonplanarForced);
        assert_eq!(c(-1.0, 0.9), Phase::ElongatedEllipseExcluded);
        assert_eq!(c(1.0, 0.5), Phase::Inconclusive);
        assert_eq!(c(1.0, 3.0), Phase::FlatExcluded);
        assert!(phase_classify(&FunctionalParams::new(1.0, 1.0).unwrap(), 4.5).is_err());
    }

    #[test]
    fn partials_match_finite_differences() {
        let p = FunctionalParams::new(0.7, 3.0).unwrap();
        let (a, b) = (2.3, 9.1);
        let (d1, d2) = h_partials(&p, a, b);
        let h = 1e-6;
        let f1 = (h_value(&p, a + h, b).unwrap() - h_value(&p, a - h, b).unwrap()) / (2.0 * h);
        let f2 = (h_value(&p, a, b + h).unwrap() - h_value(&p, a, b - h).unwrap()) / (2.0 * h);
        assert!((d1 - f1).abs() < 1e-8 && (d2 - f2).abs() < 1e-8);
        assert!(d1 < 0.0 && d2 < 0.0);
    }
}
