//! Real trigonometric series on the unit circle, uniform quadrature and
//! harmonic extension into the disk.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub const PARITY_TOL: f64 = 1e-12;

/// Behaviour under the reflections y -> -y (theta -> -theta) and
/// x -> -x (theta -> pi - theta).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    None,
    /// invariant under x -> -x: cos of even order, sin of odd order
    EvenX,
    /// invariant under y -> -y: cosines only
    EvenY,
    /// cos 2k theta only
    EvenBoth,
    /// cos (2k+1) theta only
    OddXEvenY,
    /// sin (2k+1) theta only
    EvenXOddY,
}

impl Parity {
    /// Whether the basis function cos(k theta) (`is_sin == false`) or
    /// sin(k theta) is compatible with this parity.
    pub fn allows(self, k: usize, is_sin: bool) -> bool {
        let even = k % 2 == 0;
        match (self, is_sin) {
            (_, true) if k == 0 => false,
            (Parity::None, _) => true,
            (Parity::EvenX, false) => even,
            (Parity::EvenX, true) => !even,
            (Parity::EvenY, s) => !s,
            (Parity::EvenBoth, s) => !s && even,
            (Parity::OddXEvenY, s) => !s && !even,
            (Parity::EvenXOddY, s) => s && !even,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub n_modes: usize,
    /// a_0 .. a_N
    pub cos_coeffs: Vec<f64>,
    /// b_0 .. b_N with b_0 = 0 kept for index alignment
    pub sin_coeffs: Vec<f64>,
    pub parity: Parity,
}

impl TrigSeries {
    pub fn zeros(n: usize) -> Self {
        TrigSeries { n_modes: n, cos_coeffs: vec![0.0; n + 1], sin_coeffs: vec![0.0; n + 1], parity: Parity::EvenBoth }
    }

    pub fn constant(c: f64, n: usize) -> Self {
        let mut s = TrigSeries::zeros(n);
        s.cos_coeffs[0] = c;
        s
    }

    /// Builds a series and records the detected parity (coefficients that the
    /// parity forbids are set to exactly zero).
    pub fn new(mut cos_coeffs: Vec<f64>, mut sin_coeffs: Vec<f64>) -> Self {
        let n = cos_coeffs.len().max(sin_coeffs.len()).max(1) - 1;
        cos_coeffs.resize(n + 1, 0.0);
        sin_coeffs.resize(n + 1, 0.0);
        sin_coeffs[0] = 0.0;
        let mut s = TrigSeries { n_modes: n, cos_coeffs, sin_coeffs, parity: Parity::None };
        s.parity = s.detect_parity(PARITY_TOL);
        s.enforce_parity();
        s
    }

    /// Pure cosine series with an explicit coefficient list.
    pub fn cosine(cos_coeffs: Vec<f64>) -> Self {
        TrigSeries::new(cos_coeffs, Vec::new())
    }

    pub fn detect_parity(&self, tol: f64) -> Parity {
        let scale = self.cos_coeffs.iter().chain(&self.sin_coeffs).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let fits = |p: Parity| {
            (0..=self.n_modes).all(|k| {
                (p.allows(k, false) || self.cos_coeffs[k].abs() <= tol * scale)
                    && (p.allows(k, true) || self.sin_coeffs[k].abs() <= tol * scale)
            })
        };
        [Parity::EvenBoth, Parity::OddXEvenY, Parity::EvenXOddY, Parity::EvenX, Parity::EvenY]
            .into_iter()
            .find(|&p| fits(p))
            .unwrap_or(Parity::None)
    }

    fn enforce_parity(&mut self) {
        let p = self.parity;
        for k in 0..=self.n_modes {
            if !p.allows(k, false) {
                self.cos_coeffs[k] = 0.0;
            }
            if !p.allows(k, true) {
                self.sin_coeffs[k] = 0.0;
            }
        }
    }

    /// Re-detect parity after an in-place coefficient change.
    pub fn refresh_parity(mut self) -> Self {
        self.parity = self.detect_parity(PARITY_TOL);
        self.enforce_parity();
        self
    }

    /// Clenshaw summation of a_0 + sum a_k cos k theta + b_k sin k theta.
    pub fn evaluate(&self, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let two_c = 2.0 * c;
        let mut ua = (0.0, 0.0);
        let mut ub = (0.0, 0.0);
        for k in (1..=self.n_modes).rev() {
            let na = self.cos_coeffs[k] + two_c * ua.0 - ua.1;
            ua = (na, ua.0);
            let nb = self.sin_coeffs[k] + two_c * ub.0 - ub.1;
            ub = (nb, ub.0);
        }
        // sum_{k>=1} a_k cos k = c u1 - u2 ; sum b_k sin k = s u1
        self.cos_coeffs[0] + (c * ua.0 - ua.1) + s * ub.0
    }

    /// Derivative in theta.
    pub fn derivative(&self) -> TrigSeries {
        let n = self.n_modes;
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for k in 1..=n {
            a[k] = k as f64 * self.sin_coeffs[k];
            b[k] = -(k as f64) * self.cos_coeffs[k];
        }
        TrigSeries::new(a, b)
    }

    /// Values on the uniform grid theta_j = 2 pi j / n (aliasing folded in).
    pub fn grid_values(&self, n: usize) -> Vec<f64> {
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0] += self.cos_coeffs[0];
        for k in 1..=self.n_modes {
            let (a, b) = (self.cos_coeffs[k], self.sin_coeffs[k]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            spec[k % n] += Complex64::new(0.5 * a, -0.5 * b);
            spec[(n - k % n) % n] += Complex64::new(0.5 * a, 0.5 * b);
        }
        fft_plan(n, true).process(&mut spec);
        spec.into_iter().map(|z| z.re).collect()
    }

    /// Harmonic extension and its first derivatives at (r, theta).
    pub fn harmonic_extension(&self, r: f64, theta: f64) -> Result<HarmonicSample> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("radius {r} outside [0, 1]")));
        }
        let (ct, st) = (theta.cos(), theta.sin());
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut rk1 = 1.0; // r^{k-1}
        let mut value = self.cos_coeffs[0];
        let mut dr = 0.0;
        let mut dth = 0.0;
        for k in 1..=self.n_modes {
            let nc = ck * ct - sk * st;
            sk = sk * ct + ck * st;
            ck = nc;
            let (a, b) = (self.cos_coeffs[k], self.sin_coeffs[k]);
            let kf = k as f64;
            let ang = a * ck + b * sk;
            value += rk1 * r * ang;
            dr += kf * rk1 * ang;
            dth += kf * rk1 * (b * ck - a * sk);
            rk1 *= r;
            if rk1 == 0.0 {
                break;
            }
        }
        let dx = ct * dr - st * dth;
        let dy = st * dr + ct * dth;
        Ok(HarmonicSample { value, dr, dtheta_over_r: dth, dx, dy })
    }

    /// Dirichlet energy of the harmonic extension, pi sum k (a_k^2 + b_k^2).
    pub fn dirichlet_energy(&self) -> f64 {
        (1..=self.n_modes).map(|k| PI * k as f64 * (self.cos_coeffs[k].powi(2) + self.sin_coeffs[k].powi(2))).sum()
    }

    /// f(theta - alpha).
    pub fn rotate(&self, alpha: f64) -> TrigSeries {
        let n = self.n_modes;
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        a[0] = self.cos_coeffs[0];
        for k in 1..=n {
            let (c, s) = ((k as f64 * alpha).cos(), (k as f64 * alpha).sin());
            a[k] = self.cos_coeffs[k] * c - self.sin_coeffs[k] * s;
            b[k] = self.cos_coeffs[k] * s + self.sin_coeffs[k] * c;
        }
        TrigSeries::new(a, b)
    }

    pub fn resized(&self, n: usize) -> TrigSeries {
        let mut a = self.cos_coeffs.clone();
        let mut b = self.sin_coeffs.clone();
        a.resize(n + 1, 0.0);
        b.resize(n + 1, 0.0);
        TrigSeries::new(a, b)
    }

    pub fn scaled(&self, c: f64) -> TrigSeries {
        TrigSeries {
            n_modes: self.n_modes,
            cos_coeffs: self.cos_coeffs.iter().map(|v| v * c).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|v| v * c).collect(),
            parity: self.parity,
        }
    }

    /// Coefficient vector in the interleaved basis [1, cos 1, sin 1, cos 2, ...].
    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.n_modes + 1);
        v.push(self.cos_coeffs[0]);
        for k in 1..=self.n_modes {
            v.push(self.cos_coeffs[k]);
            v.push(self.sin_coeffs[k]);
        }
        v
    }

    pub fn from_interleaved(v: &[f64]) -> TrigSeries {
        let n = (v.len() - 1) / 2;
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        a[0] = v[0];
        for k in 1..=n {
            a[k] = v[2 * k - 1];
            b[k] = v[2 * k];
        }
        TrigSeries::new(a, b)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicSample {
    pub value: f64,
    pub dr: f64,
    pub dtheta_over_r: f64,
    pub dx: f64,
    pub dy: f64,
}

/// Uniform trapezoid rule on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub n_points: usize,
}

impl QuadratureGrid {
    /// Smallest power of two >= 4N + 4.
    pub fn for_degree(n_modes: usize) -> Self {
        QuadratureGrid { n_points: (4 * n_modes + 4).next_power_of_two() }
    }

    pub fn with_points(n_points: usize) -> Self {
        QuadratureGrid { n_points }
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_points as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.angle(j)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.weight()
    }
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Degree-N series from samples on the uniform grid of `samples.len()` points.
pub fn project_samples(samples: &[f64], n_modes: usize) -> Result<TrigSeries> {
    let m = samples.len();
    if m < 2 * n_modes + 2 {
        return Err(Error::Resolution(format!("{m} samples cannot resolve degree {n_modes}")));
    }
    if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite sample at index {j}")));
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_plan(m, false).process(&mut buf);
    let scale = 2.0 / m as f64;
    let mut a = vec![0.0; n_modes + 1];
    let mut b = vec![0.0; n_modes + 1];
    a[0] = buf[0].re / m as f64;
    for k in 1..=n_modes {
        a[k] = buf[k].re * scale;
        b[k] = -buf[k].im * scale;
    }
    Ok(TrigSeries::new(a, b))
}

/// Samples `f` on the quadrature grid for degree `n_modes` and projects.
pub fn project(f: impl Fn(f64) -> f64, n_modes: usize) -> Result<TrigSeries> {
    project_oversampled(f, n_modes, QuadratureGrid::for_degree(n_modes).n_points)
}

pub fn project_oversampled(f: impl Fn(f64) -> f64, n_modes: usize, n_points: usize) -> Result<TrigSeries> {
    let g = QuadratureGrid::with_points(n_points);
    let samples: Vec<f64> = g.angles().into_iter().map(f).collect();
    project_samples(&samples, n_modes)
}

/// One element of the real trigonometric basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisFn {
    /// cos(k theta); k = 0 is the constant
    Cos(usize),
    Sin(usize),
}

impl BasisFn {
    pub fn order(self) -> usize {
        match self {
            BasisFn::Cos(k) | BasisFn::Sin(k) => k,
        }
    }

    pub fn eval(self, theta: f64) -> f64 {
        match self {
            BasisFn::Cos(k) => (k as f64 * theta).cos(),
            BasisFn::Sin(k) => (k as f64 * theta).sin(),
        }
    }
}

/// Full basis [1, cos 1, sin 1, ..., cos N, sin N].
pub fn full_basis(n: usize) -> Vec<BasisFn> {
    let mut v = vec![BasisFn::Cos(0)];
    for k in 1..=n {
        v.push(BasisFn::Cos(k));
        v.push(BasisFn::Sin(k));
    }
    v
}

/// Weight moments W_c(j) = int w cos j, W_s(j) = int w sin j.
struct Moments<'a> {
    w: &'a TrigSeries,
}

impl Moments<'_> {
    fn c(&self, j: usize) -> f64 {
        match j {
            0 => 2.0 * PI * self.w.cos_coeffs[0],
            j if j <= self.w.n_modes => PI * self.w.cos_coeffs[j],
            _ => 0.0,
        }
    }
    fn s(&self, j: usize) -> f64 {
        if j >= 1 && j <= self.w.n_modes {
            PI * self.w.sin_coeffs[j]
        } else {
            0.0
        }
    }
}

/// B_{mn} = int e_m e_n w over an arbitrary basis list (exact for the given
/// weight series).
pub fn mass_matrix_on(weight: &TrigSeries, basis: &[BasisFn]) -> Mat {
    let mo = Moments { w: weight };
    let n = basis.len();
    let mut b = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = match (basis[i], basis[j]) {
                (BasisFn::Cos(m), BasisFn::Cos(k)) => 0.5 * (mo.c(m.abs_diff(k)) + mo.c(m + k)),
                (BasisFn::Sin(m), BasisFn::Sin(k)) => 0.5 * (mo.c(m.abs_diff(k)) - mo.c(m + k)),
                (BasisFn::Cos(m), BasisFn::Sin(k)) | (BasisFn::Sin(k), BasisFn::Cos(m)) => {
                    let diff = match k.cmp(&m) {
                        std::cmp::Ordering::Greater => mo.s(k - m),
                        std::cmp::Ordering::Less => -mo.s(m - k),
                        std::cmp::Ordering::Equal => 0.0,
                    };
                    0.5 * (mo.s(m + k) + diff)
                }
            };
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Checks positivity of the weight on the quadrature grid for degree N.
pub fn check_positive(weight: &TrigSeries, n_modes: usize) -> Result<f64> {
    let pts = QuadratureGrid::for_degree(n_modes.max(weight.n_modes)).n_points;
    let vals = weight.grid_values(pts);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Positivity(format!("weight minimum {min:e} on a {pts}-point grid")));
    }
    Ok(min)
}

/// Mass matrix in the full interleaved basis of degree N.
pub fn mass_matrix(weight: &TrigSeries, n_modes: usize) -> Result<Mat> {
    check_positive(weight, n_modes)?;
    Ok(mass_matrix_on(weight, &full_basis(n_modes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_projection() {
        let s = project(|_| 1.0, 8).unwrap();
        assert!((s.cos_coeffs[0] - 1.0).abs() < 1e-15);
        assert!(s.cos_coeffs[1..].iter().chain(&s.sin_coeffs).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn cos2_is_even_both() {
        let s = project(|t| (2.0 * t).cos(), 8).unwrap();
        assert_eq!(s.parity, Parity::EvenBoth);
        assert!((s.cos_coeffs[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parity_classes() {
        assert_eq!(project(|t| t.cos(), 4).unwrap().parity, Parity::OddXEvenY);
        assert_eq!(project(|t| t.sin(), 4).unwrap().parity, Parity::EvenXOddY);
        assert_eq!(project(|t| t.cos() + (2.0 * t).cos(), 4).unwrap().parity, Parity::EvenY);
        assert_eq!(project(|t| t.sin() + (2.0 * t).cos(), 4).unwrap().parity, Parity::EvenX);
        assert_eq!(project(|t| (2.0 * t).sin(), 4).unwrap().parity, Parity::None);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(project(|_| f64::NAN, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn harmonic_extension_examples() {
        let x = TrigSeries::new(vec![0.0, 1.0], vec![]);
        let h = x.harmonic_extension(0.7, 0.3).unwrap();
        assert!((h.value - 0.7 * 0.3f64.cos()).abs() < 1e-15);
        assert!((h.dx - 1.0).abs() < 1e-15 && h.dy.abs() < 1e-15);
        let c2 = TrigSeries::new(vec![0.0, 0.0, 1.0], vec![]);
        assert!((c2.harmonic_extension(0.5, 0.0).unwrap().value - 0.25).abs() < 1e-15);
        assert!(c2.harmonic_extension(1.1, 0.0).is_err());
        let h0 = x.harmonic_extension(0.0, 1.0).unwrap();
        assert!((h0.dx - 1.0).abs() < 1e-15 && h0.dy.abs() < 1e-15);
    }

    #[test]
    fn flat_mass_matrix() {
        let b = mass_matrix(&TrigSeries::constant(1.0, 0), 5).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                let expect = if i != j {
                    0.0
                } else if i == 0 {
                    2.0 * PI
                } else {
                    PI
                };
                assert!((b[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn grid_values_fold_aliasing() {
        let s = TrigSeries::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0], vec![]);
        let v = s.grid_values(8);
        for (j, vj) in v.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 8.0;
            assert!((vj - (5.0 * t).cos()).abs() < 1e-14);
        }
    }
}
