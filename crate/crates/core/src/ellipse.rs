//! The weighted Steklov problem of the ellipse {p x^2 + y^2 = 1}, pulled back
//! to the disk by its Riemann map, index functions k1(p), k2(p) and the
//! critical axis ratio theta_star.
//!
//! The Riemann map of an ellipse with foci +-c is
//! `f(z) = c sin(pi/(2K) F(z/sqrt(k)))`, `F = sn^{-1}`, with modulus k fixed by
//! the nome `q = exp(-4 tau)`, `tanh tau = b/a`. On the circle we only need the
//! boundary correspondence: `z(s) = sqrt(k) sn(2K s/pi + i K'/2)` is unimodular
//! and maps to `f = c sin(s + i tau) = (a sin s, b cos s)`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::elliptic::{ellipj, ellipk, modulus_from_nome};
use crate::error::{Error, Result};
use crate::steklov::{solve_spectrum, weighted_inner, BoundaryWeight, SteklovSpectrum};
use crate::trig::{project_samples, TrigSeries};

pub const FIT_TOL: f64 = 1e-8;

/// Exact boundary correspondence of the ellipse map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub p: f64,
    /// elliptic modulus k (0 for the circle)
    pub k: f64,
    /// K(k^2)
    pub kk: f64,
    table: Vec<f64>,
}

impl Correspondence {
    pub fn new(p: f64) -> Self {
        if p >= 1.0 {
            return Correspondence { p: 1.0, k: 0.0, kk: PI / 2.0, table: Vec::new() };
        }
        let tau = p.sqrt().atanh();
        let k = modulus_from_nome((-4.0 * tau).exp());
        let kk = ellipk(k * k);
        let mut c = Correspondence { p, k, kk, table: Vec::new() };
        let n = 4096;
        let mut tab = Vec::with_capacity(n + 1);
        let mut prev = 0.0;
        for j in 0..=n {
            let s = 2.0 * PI * j as f64 / n as f64;
            let (z, _) = c.z_of_s(s);
            let mut psi = PI / 2.0 - z.arg();
            while psi < prev - PI {
                psi += 2.0 * PI;
            }
            while psi > prev + PI {
                psi -= 2.0 * PI;
            }
            tab.push(psi);
            prev = psi;
        }
        c.table = tab;
        c
    }

    /// Point of the circle corresponding to the ellipse parameter s, and
    /// |dz/ds|.
    pub fn z_of_s(&self, s: f64) -> (Complex64, f64) {
        if self.k == 0.0 {
            return (Complex64::new((PI / 2.0 - s).cos(), (PI / 2.0 - s).sin()), 1.0);
        }
        let k = self.k;
        let m = k * k;
        let u = 2.0 * self.kk / PI * s;
        let (sn, cn, dn) = ellipj(u, m);
        let s1 = 1.0 / (1.0 + k).sqrt();
        let c1 = (k / (1.0 + k)).sqrt();
        let d1 = k.sqrt();
        let den = c1 * c1 + m * sn * sn * s1 * s1;
        let snc = Complex64::new(sn * d1, cn * dn * s1 * c1) / den;
        let cnc = Complex64::new(cn * c1, -sn * dn * s1 * d1) / den;
        let dnc = Complex64::new(dn * c1 * d1, -m * sn * cn * s1) / den;
        let z = snc * k.sqrt();
        let dz = (cnc * dnc).norm() * k.sqrt() * 2.0 * self.kk / PI;
        (z, dz)
    }

    /// Ellipse parameter s with z(s) = e^{i theta}.
    pub fn s_of_theta(&self, theta: f64) -> f64 {
        if self.k == 0.0 {
            return PI / 2.0 - theta;
        }
        let target = (PI / 2.0 - theta).rem_euclid(2.0 * PI);
        let n = self.table.len() - 1;
        let j = self.table.partition_point(|&v| v <= target).clamp(1, n);
        let (mut lo, mut hi) = (2.0 * PI * (j - 1) as f64 / n as f64, 2.0 * PI * j as f64 / n as f64);
        let (plo, phi) = (self.table[j - 1], self.table[j]);
        let mut s = lo + (hi - lo) * ((target - plo) / (phi - plo)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let (z, dz) = self.z_of_s(s);
            // theta - arg z = psi(s) - target (mod 2 pi)
            let r = (Complex64::from_polar(1.0, theta) * z.conj()).arg();
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - r / dz;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() < 1e-15 * (1.0 + s.abs()) {
                return next;
            }
            s = next;
        }
        s
    }

    /// Ellipse point (X, Y) = (sin s / sqrt p, cos s).
    pub fn point(&self, s: f64) -> (f64, f64) {
        (s.sin() / self.p.sqrt(), s.cos())
    }

    /// Pulled-back boundary density at the ellipse parameter s.
    pub fn density(&self, s: f64) -> f64 {
        1.0 / (self.p.sqrt() * self.z_of_s(s).1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseProblem {
    pub p: f64,
    /// c_1, c_3, ..., c_{2M-1}
    pub map_coeffs: Vec<f64>,
    pub map_degree: usize,
    /// max |p X^2 + Y^2 - 1| of the truncated series on the circle
    pub residual: f64,
    pub min_derivative: f64,
    pub correspondence: Correspondence,
}

impl EllipseProblem {
    /// Truncated map at z.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let z2 = z * z;
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.map_coeffs.iter().rev() {
            acc = acc * z2 + c;
        }
        acc * z
    }

    /// Area of the image, pi sum j c_j^2.
    pub fn image_area(&self) -> f64 {
        self.map_coeffs.iter().enumerate().map(|(i, c)| PI * (2 * i + 1) as f64 * c * c).sum()
    }
}

/// Riemann map of the ellipse with f(1) = 1/sqrt(p) and f'(0) > 0, truncated
/// to M odd modes.
pub fn conformal_map(p: f64, m_modes: usize) -> Result<EllipseProblem> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1]")));
    }
    if m_modes < 16 {
        return Err(Error::Domain(format!("map degree M = {m_modes} below 16")));
    }
    let corr = Correspondence::new(p);
    let deg = 2 * m_modes;
    let npts = (8 * deg).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..npts)
        .map(|j| {
            let (x, y) = corr.point(corr.s_of_theta(2.0 * PI * j as f64 / npts as f64));
            Complex64::new(x, y)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(npts).process(&mut buf);
    let map_coeffs: Vec<f64> = (0..m_modes).map(|i| buf[2 * i + 1].re / npts as f64).collect();

    // residual and |f'| of the truncated series on a staggered grid
    let mut coef = vec![Complex64::new(0.0, 0.0); npts];
    let mut dcoef = vec![Complex64::new(0.0, 0.0); npts];
    for (i, &c) in map_coeffs.iter().enumerate() {
        let j = 2 * i + 1;
        coef[j] = Complex64::new(c, 0.0);
        dcoef[j - 1] = Complex64::new(j as f64 * c, 0.0);
    }
    let shift = PI / npts as f64;
    for (j, (a, b)) in coef.iter_mut().zip(dcoef.iter_mut()).enumerate() {
        let ph = Complex64::from_polar(1.0, j as f64 * shift);
        *a *= ph;
        *b *= ph;
    }
    let inv = planner.plan_fft_inverse(npts);
    inv.process(&mut coef);
    inv.process(&mut dcoef);
    let residual = coef.iter().map(|f| (p * f.re * f.re + f.im * f.im - 1.0).abs()).fold(0.0, f64::max);
    let min_derivative = dcoef.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    if residual > FIT_TOL || !residual.is_finite() {
        return Err(Error::Resolution(format!(
            "boundary fit residual {residual:e} above {FIT_TOL:e} with M = {m_modes}; raise M"
        )));
    }
    if !(min_derivative > 0.0) {
        return Err(Error::Resolution("map derivative vanishes on the circle".into()));
    }
    Ok(EllipseProblem { p, map_coeffs, map_degree: m_modes, residual, min_derivative, correspondence: corr })
}

/// Smallest map degree M (power of two, >= 16) meeting the fit tolerance.
pub fn conformal_map_auto(p: f64) -> Result<EllipseProblem> {
    let mut m = 16;
    loop {
        match conformal_map(p, m) {
            Err(Error::Resolution(_)) if m < 1 << 16 => m *= 2,
            r => return r,
        }
    }
}

/// Pulled-back density w = (p^2 X^2 + Y^2)^{-1/2} |f'| of degree 2N, from the
/// exact boundary correspondence.
pub fn pullback_weight(problem: &EllipseProblem, n: usize) -> Result<BoundaryWeight> {
    if problem.residual > FIT_TOL {
        return Err(Error::Stale(format!("map residual {:e} above threshold", problem.residual)));
    }
    let corr = &problem.correspondence;
    let npts = (16 * n + 16).next_power_of_two();
    let samples: Vec<f64> =
        (0..npts).map(|j| corr.density(corr.s_of_theta(2.0 * PI * j as f64 / npts as f64))).collect();
    BoundaryWeight::new(project_samples(&samples, 2 * n)?)
}

/// Traces of the pulled-back coordinates X o f and Y o f at degree N.
pub fn coordinate_traces(problem: &EllipseProblem, n: usize) -> Result<(TrigSeries, TrigSeries)> {
    let corr = &problem.correspondence;
    let npts = (8 * n + 8).next_power_of_two();
    let pts: Vec<(f64, f64)> =
        (0..npts).map(|j| corr.point(corr.s_of_theta(2.0 * PI * j as f64 / npts as f64))).collect();
    let xs: Vec<f64> = pts.iter().map(|q| q.0).collect();
    let ys: Vec<f64> = pts.iter().map(|q| q.1).collect();
    Ok((project_samples(&xs, n)?, project_samples(&ys, n)?))
}

/// Disk truncation that resolves the pulled-back spectrum to about 1e-8.
pub fn default_resolution(p: f64) -> usize {
    if p >= 1.0 {
        return 64;
    }
    let k = Correspondence::new(p).k;
    let delta = 1.0 / k.sqrt() - 1.0;
    ((24.0 / delta).ceil() as usize).next_power_of_two().clamp(64, 2048)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub p: f64,
    pub k1: usize,
    pub k2: usize,
    /// 2 pi sqrt(p)
    pub sigma_bar_low: f64,
    /// 2 pi / sqrt(p)
    pub sigma_bar_high: f64,
    /// computed renormalized eigenvalues matched to X o f and Y o f
    pub matched_low: f64,
    pub matched_high: f64,
    pub map_residual: f64,
    pub n_modes: usize,
}

pub const MATCH_TOL: f64 = 1e-5;

/// Locates the eigenvalues p (for X o f) and 1 (for Y o f) and counts the
/// eigenvalues strictly below each, sigma_0 included.
pub fn compute_indices(p: f64, n: usize) -> Result<IndexResult> {
    let problem = conformal_map_auto(p)?;
    let weight = pullback_weight(&problem, n)?;
    let spec = solve_spectrum(&weight, n, 12)?;
    let (xt, yt) = coordinate_traces(&problem, n)?;
    let find = |target: f64, trace: &TrigSeries| -> Result<usize> {
        let tn = weighted_inner(trace, trace, &weight.density).sqrt();
        (1..spec.sigmas.len())
            .find(|&j| {
                let s = spec.sigmas[j];
                let corr = weighted_inner(&spec.eigen_traces[j], trace, &weight.density).abs() / tn;
                (s - target).abs() <= MATCH_TOL * target && corr >= 0.99
            })
            .ok_or_else(|| {
                Error::Resolution(format!("no eigenvalue within {MATCH_TOL:e} of {target} at N = {n}; raise N"))
            })
    };
    let count_below = |spec: &SteklovSpectrum, j: usize| {
        let s = spec.sigmas[j];
        spec.sigmas.iter().filter(|&&x| x < s - 1e-9 * (1.0 + s)).count()
    };
    let jx = find(p, &xt)?;
    let jy = find(1.0, &yt)?;
    let l = spec.boundary_length;
    Ok(IndexResult {
        p,
        k1: count_below(&spec, jx),
        k2: count_below(&spec, jy),
        sigma_bar_low: 2.0 * PI * p.sqrt(),
        sigma_bar_high: 2.0 * PI / p.sqrt(),
        matched_low: spec.sigmas[jx] * l,
        matched_high: spec.sigmas[jy] * l,
        map_residual: problem.residual,
        n_modes: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub k2_lo: usize,
    pub k2_hi: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaStarReport {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub transitions: Vec<Transition>,
    pub scan: Vec<(f64, usize)>,
    pub multivalued: bool,
}

fn k2_at_ratio(ratio: f64) -> Result<usize> {
    let p = 1.0 / ratio;
    Ok(compute_indices(p, default_resolution(p))?.k2)
}

/// Scans 1/p over (1, 4.5], then bisects the last k2 < 3 -> k2 >= 3 step.
pub fn estimate_theta_star(tolerance: f64) -> Result<ThetaStarReport> {
    let mut ratios = vec![1.05];
    let mut r = 1.25;
    while r <= 4.5 + 1e-12 {
        ratios.push(r);
        r += 0.25;
    }
    let scan: Vec<(f64, usize)> = ratios.iter().map(|&r| k2_at_ratio(r).map(|k| (r, k))).collect::<Result<_>>()?;
    let transitions: Vec<Transition> = scan
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| Transition { ratio_lo: w[0].0, ratio_hi: w[1].0, k2_lo: w[0].1, k2_hi: w[1].1 })
        .collect();
    let last_low =
        scan.iter().rposition(|x| x.1 < 3).ok_or_else(|| Error::Structure("k2 >= 3 over the whole scan".into()))?;
    if last_low + 1 == scan.len() {
        return Err(Error::Structure("k2 < 3 up to 1/p = 4.5".into()));
    }
    let multivalued = scan[..last_low].iter().any(|x| x.1 >= 3);
    let (mut lo, mut hi) = (scan[last_low].0, scan[last_low + 1].0);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if k2_at_ratio(mid)? >= 3 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThetaStarReport { bracket_lo: lo, bracket_hi: hi, transitions, scan, multivalued })
}
