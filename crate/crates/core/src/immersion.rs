//! The map Phi = (Phi_0, Phi_1, Phi_2) = (a_0 phi_0, a_1 phi_1, a_2 phi_2) of
//! first and second eigenfunctions into the ellipsoid
//! sigma_1 x_0^2 + sigma_2 (x_1^2 + x_2^2) = 1, and its geometric checks.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::FunctionalParams;
use crate::linalg::{spd_solve, Mat};
use crate::steklov::{Block, BoundaryWeight, SteklovSpectrum};
use crate::trig::{QuadratureGrid, TrigSeries};

/// Relative gap under which a CosEven/CosOdd pair counts as one eigenspace.
pub const MULTIPLET_TOL: f64 = 1e-5;
/// phi_2 with boundary norm below this fraction of L is treated as absent.
pub const PLANAR_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Immersion {
    /// w-orthonormal traces phi_0 (odd in y), phi_1 (odd in x), phi_2 (even)
    pub fields: [TrigSeries; 3],
    /// alpha_i; alpha_2 = 0 when phi_2 is absent
    pub scalings: [f64; 3],
    /// eigenvalue of each field (sigma_1, sigma_2, sigma_2)
    pub sigma: [f64; 3],
    pub planar: bool,
    /// sigmabar_1 / sigmabar_2
    pub ellipsoid_p: f64,
    pub boundary_length: f64,
    /// max |sum sigma_i Phi_i^2 - 1| on the boundary
    pub ellipsoid_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ellipsoid_residual: f64,
    pub conformality_residual: f64,
    pub min_boundary_speed: f64,
    pub jacobian_min: f64,
    pub winding: i64,
    pub nodal_counts: [Option<usize>; 3],
    pub area: f64,
    pub area_mismatch: f64,
    pub critical_weight_mismatch: f64,
}

/// Scaled component Phi_i.
fn scaled_field(imm: &Immersion, i: usize) -> TrigSeries {
    imm.fields[i].scaled(imm.scalings[i])
}

pub fn build_immersion(spectrum: &SteklovSpectrum) -> Result<Immersion> {
    if spectrum.sigmas.len() < 3 {
        return Err(Error::Stale("need at least sigma_0, sigma_1, sigma_2".into()));
    }
    let s1 = spectrum.sigmas[1];
    let s2 = spectrum.sigmas[2];
    let near = |j: usize, s: f64| (spectrum.sigmas[j] - s).abs() <= MULTIPLET_TOL * s;
    let pick =
        |s: f64, block: Block| (1..spectrum.sigmas.len()).find(|&j| near(j, s) && spectrum.blocks[j] == Some(block));
    let j0 = pick(s1, Block::SinOdd).ok_or_else(|| {
        Error::Structure(format!("no sin-odd eigenfunction at sigma_1 (blocks {:?})", &spectrum.blocks[..3]))
    })?;
    let j1 = pick(s2, Block::CosOdd)
        .ok_or_else(|| Error::Structure("second eigenspace has no cos-odd eigenfunction".into()))?;
    let j2 = pick(s2, Block::CosEven);
    let n = spectrum.n_modes;
    let zero = TrigSeries::zeros(n);
    let fields = [
        spectrum.eigen_traces[j0].clone(),
        spectrum.eigen_traces[j1].clone(),
        j2.map(|j| spectrum.eigen_traces[j].clone()).unwrap_or(zero),
    ];
    let sigma = [spectrum.sigmas[j0], spectrum.sigmas[j1], j2.map(|j| spectrum.sigmas[j]).unwrap_or(s2)];

    let grid = QuadratureGrid::for_degree(4 * n);
    let vals: Vec<Vec<f64>> = fields.iter().map(|f| f.grid_values(grid.n_points)).collect();
    let m = if j2.is_some() { 3 } else { 2 };
    let rows: Vec<Vec<f64>> =
        (0..grid.n_points).map(|p| (0..m).map(|i| sigma[i] * vals[i][p] * vals[i][p]).collect()).collect();
    let ata = Mat::from_fn(m, m, |i, j| rows.iter().map(|r| r[i] * r[j]).sum());
    let atb: Vec<f64> = (0..m).map(|i| rows.iter().map(|r| r[i]).sum()).collect();
    let x = spd_solve(&ata, &atb)?;
    if let Some(i) = x.iter().position(|v| *v < 0.0) {
        return Err(Error::Infeasible(format!("negative squared scaling for component {i}: {:e}", x[i])));
    }
    let mut scalings = [0.0; 3];
    for i in 0..m {
        scalings[i] = x[i].sqrt();
    }
    let ellipsoid_residual =
        rows.iter().map(|r| (r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let l = spectrum.boundary_length;
    let phi2_norm = scalings[2] * (grid.integrate(&vals[2].iter().map(|v| v * v).collect::<Vec<_>>())).sqrt();
    let planar = j2.is_none() || phi2_norm < PLANAR_TOL * l;
    if planar {
        scalings[2] = 0.0;
    }
    Ok(Immersion {
        fields,
        scalings,
        sigma,
        planar,
        ellipsoid_p: sigma[0] / sigma[1],
        boundary_length: l,
        ellipsoid_residual,
    })
}

impl Immersion {
    /// The immersion composed with (x, y) -> (-x, y) or (x, y) -> (x, -y).
    pub fn reflected(&self, flip_x: bool) -> Immersion {
        let mut out = self.clone();
        for f in out.fields.iter_mut() {
            let mut a = f.cos_coeffs.clone();
            let mut b = f.sin_coeffs.clone();
            for k in 1..=f.n_modes {
                if flip_x {
                    // theta -> pi - theta
                    if k % 2 == 1 {
                        a[k] = -a[k];
                    } else {
                        b[k] = -b[k];
                    }
                } else {
                    b[k] = -b[k];
                }
            }
            *f = TrigSeries::new(a, b);
        }
        out
    }

    /// Mass fractions sigma_1 int Phi_0^2 w / L and sigma_2 int |eta|^2 w / L.
    pub fn mass_fractions(&self) -> (f64, f64) {
        let a2: Vec<f64> = self.scalings.iter().map(|a| a * a).collect();
        let l = self.boundary_length;
        (self.sigma[0] * a2[0] / l, (self.sigma[1] * a2[1] + self.sigma[2] * a2[2]) / l)
    }
}

/// Relative deviations of the two mass fractions from a^{-s}/f and
/// t b^{-s}/f.
pub fn mass_residuals(imm: &Immersion, params: &FunctionalParams) -> (f64, f64) {
    let l = imm.boundary_length;
    let (e0, e12) = params.mass_fractions(imm.sigma[0] * l, imm.sigma[1] * l);
    let (m0, m12) = imm.mass_fractions();
    ((m0 - e0).abs() / e0, (m12 - e12).abs() / e12)
}

/// Values and Cartesian gradient of a harmonic extension on one ring.
struct Ring {
    value: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

fn ring(trace: &TrigSeries, r: f64, n_theta: usize) -> Ring {
    let n = trace.n_modes;
    let mut va = trace.cos_coeffs.clone();
    let mut vb = trace.sin_coeffs.clone();
    let mut ra = vec![0.0; n + 1];
    let mut rb = vec![0.0; n + 1];
    let mut ta = vec![0.0; n + 1];
    let mut tb = vec![0.0; n + 1];
    let mut rk1 = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        let (a, b) = (trace.cos_coeffs[k], trace.sin_coeffs[k]);
        va[k] = a * rk1 * r;
        vb[k] = b * rk1 * r;
        ra[k] = kf * rk1 * a;
        rb[k] = kf * rk1 * b;
        ta[k] = kf * rk1 * b;
        tb[k] = -kf * rk1 * a;
        rk1 *= r;
    }
    let value = TrigSeries::new(va, vb).grid_values(n_theta);
    let dr = TrigSeries::new(ra, rb).grid_values(n_theta);
    let dt = TrigSeries::new(ta, tb).grid_values(n_theta);
    let mut dx = vec![0.0; n_theta];
    let mut dy = vec![0.0; n_theta];
    for j in 0..n_theta {
        let th = 2.0 * PI * j as f64 / n_theta as f64;
        let (c, s) = (th.cos(), th.sin());
        dx[j] = c * dr[j] - s * dt[j];
        dy[j] = s * dr[j] + c * dt[j];
    }
    Ring { value, dx, dy }
}

/// min over the circle of |Phi_theta|.
pub fn verify_no_boundary_branch(imm: &Immersion) -> f64 {
    let n = imm.fields[0].n_modes;
    let pts = (8 * n + 8).next_power_of_two().max(1024);
    let derivs: Vec<Vec<f64>> = (0..3).map(|i| scaled_field(imm, i).derivative().grid_values(pts)).collect();
    (0..pts).map(|j| (0..3).map(|i| derivs[i][j].powi(2)).sum::<f64>().sqrt()).fold(f64::INFINITY, f64::min)
}

/// Max over an (r, theta) grid with r up to 1 of
/// (| |Phi_x|^2 - |Phi_y|^2 | + 2 |Phi_x . Phi_y|) / |grad Phi|^2.
pub fn verify_conformality(imm: &Immersion, n_r: usize, n_theta: usize) -> f64 {
    let fields: Vec<TrigSeries> = (0..3).map(|i| scaled_field(imm, i)).collect();
    let mut samples = Vec::with_capacity(n_r * n_theta);
    for i in 1..=n_r {
        let r = i as f64 / n_r as f64;
        let rings: Vec<Ring> = fields.iter().map(|f| ring(f, r, n_theta)).collect();
        for j in 0..n_theta {
            let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
            for rg in &rings {
                xx += rg.dx[j] * rg.dx[j];
                yy += rg.dy[j] * rg.dy[j];
                xy += rg.dx[j] * rg.dy[j];
            }
            samples.push(((xx - yy).abs() + 2.0 * xy.abs(), xx + yy));
        }
    }
    let gmax = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    samples.iter().filter(|s| s.1 >= 1e-12 * gmax).map(|s| s.0 / s.1).fold(0.0, f64::max)
}

/// Max relative deviation between w and |Phi_theta| /
/// (sum sigma_i^2 Phi_i^2)^{1/2}, both normalized to total mass 2 pi.
pub fn verify_critical_weight(imm: &Immersion, weight: &BoundaryWeight) -> Result<f64> {
    let n = imm.fields[0].n_modes.max(weight.density.n_modes);
    let grid = QuadratureGrid::for_degree(2 * n);
    let m = grid.n_points;
    let vals: Vec<Vec<f64>> = (0..3).map(|i| scaled_field(imm, i).grid_values(m)).collect();
    let ders: Vec<Vec<f64>> = (0..3).map(|i| scaled_field(imm, i).derivative().grid_values(m)).collect();
    let mut rhs = Vec::with_capacity(m);
    for j in 0..m {
        let den: f64 = (0..3).map(|i| (imm.sigma[i] * vals[i][j]).powi(2)).sum::<f64>().sqrt();
        if !(den > 1e-14) {
            return Err(Error::Degenerate(format!(
                "sum sigma_i^2 Phi_i^2 vanishes at theta = {}; suspected branch point",
                grid.angle(j)
            )));
        }
        rhs.push((0..3).map(|i| ders[i][j].powi(2)).sum::<f64>().sqrt() / den);
    }
    let w = weight.density.grid_values(m);
    let (iw, ir) = (grid.integrate(&w), grid.integrate(&rhs));
    Ok(w.iter()
        .zip(&rhs)
        .map(|(a, b)| {
            let (a, b) = (a * 2.0 * PI / iw, b * 2.0 * PI / ir);
            (a - b).abs() / a
        })
        .fold(0.0, f64::max))
}

/// Degree of a closed polygon around the origin; None when it passes within
/// `tol` of the origin.
pub fn winding_number(points: &[(f64, f64)], tol: f64) -> Option<i64> {
    if points.iter().any(|p| p.0.hypot(p.1) <= tol) {
        return None;
    }
    let mut total = 0.0;
    for i in 0..points.len() {
        let (a, b) = (points[i], points[(i + 1) % points.len()]);
        let cross = a.0 * b.1 - a.1 * b.0;
        let dot = a.0 * b.0 + a.1 * b.1;
        total += cross.atan2(dot);
    }
    Some((total / (2.0 * PI)).round() as i64)
}

/// Boundary of the upper half disk in polar coordinates: the arc from
/// theta = 0 to pi, then the diameter from (-1, 0) back to (1, 0).
pub fn half_disk_boundary(samples: usize) -> Vec<(f64, f64)> {
    let half = samples / 2;
    let mut pts: Vec<(f64, f64)> = (0..half).map(|j| (1.0, PI * j as f64 / half as f64)).collect();
    for j in 0..half {
        let x = -1.0 + 2.0 * j as f64 / half as f64;
        pts.push((x.abs(), if x < 0.0 { PI } else { 0.0 }));
    }
    pts
}

fn eval_polar(f: &TrigSeries, r: f64, theta: f64) -> (f64, f64, f64) {
    let h = f.harmonic_extension(r, theta).expect("radius within the disk");
    (h.value, h.dx, h.dy)
}

/// Sign-component counts of a field on the 512 x 512 polar grid.
pub fn nodal_count(f: &TrigSeries, n_grid: usize) -> usize {
    let vals: Vec<Vec<f64>> = (0..n_grid).map(|i| ring(f, (i as f64 + 0.5) / n_grid as f64, n_grid).value).collect();
    let vmax = vals.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = 1e-9 * vmax.max(1e-300);
    let sign = |v: f64| {
        if v > thr {
            1i8
        } else if v < -thr {
            -1
        } else {
            0
        }
    };
    let mut seen = vec![vec![false; n_grid]; n_grid];
    let mut count = 0;
    for i in 0..n_grid {
        for j in 0..n_grid {
            let s = sign(vals[i][j]);
            if s == 0 || seen[i][j] {
                continue;
            }
            count += 1;
            seen[i][j] = true;
            let mut queue = VecDeque::from([(i, j)]);
            while let Some((a, b)) = queue.pop_front() {
                let mut nb = vec![(a, (b + 1) % n_grid), (a, (b + n_grid - 1) % n_grid)];
                if a > 0 {
                    nb.push((a - 1, b));
                }
                if a + 1 < n_grid {
                    nb.push((a + 1, b));
                }
                for (c, d) in nb {
                    if !seen[c][d] && sign(vals[c][d]) == s {
                        seen[c][d] = true;
                        queue.push_back((c, d));
                    }
                }
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub winding: i64,
    pub jacobian_min: f64,
    pub nodal_counts: [Option<usize>; 3],
}

pub const WINDING_SAMPLES: usize = 4096;
pub const NODAL_GRID: usize = 512;

/// Winding of eta = (Phi_1, Phi_2) along the boundary of the upper half disk,
/// min of eta_x ^ eta_y (times the sign of that degree) over the open upper
/// half disk and the upper arc, and nodal counts. Planar immersions use
/// (Phi_1, Phi_0) over the whole disk instead.
pub fn embedding_diagnostics(imm: &Immersion, resolution: usize) -> Result<EmbeddingReport> {
    let (u, v) = if imm.planar {
        (scaled_field(imm, 1), scaled_field(imm, 0))
    } else {
        (scaled_field(imm, 1), scaled_field(imm, 2))
    };
    let boundary: Vec<(f64, f64)> = if imm.planar {
        (0..WINDING_SAMPLES).map(|j| (1.0, 2.0 * PI * j as f64 / WINDING_SAMPLES as f64)).collect()
    } else {
        half_disk_boundary(WINDING_SAMPLES)
    };
    let curve: Vec<(f64, f64)> =
        boundary.iter().map(|&(r, t)| (eval_polar(&u, r, t).0, eval_polar(&v, r, t).0)).collect();
    let scale = curve.iter().fold(0.0f64, |m, p| m.max(p.0.hypot(p.1)));
    let degree = winding_number(&curve, 1e-12 * scale)
        .ok_or_else(|| Error::Structure("eta vanishes on the boundary of the half disk".into()))?;
    let sgn = if degree < 0 { -1.0 } else { 1.0 };

    let theta_span = if imm.planar { 2.0 * PI } else { PI };
    let mut jmin = f64::INFINITY;
    let mut jac = |r: f64, t: f64| {
        let (_, ux, uy) = eval_polar(&u, r, t);
        let (_, vx, vy) = eval_polar(&v, r, t);
        jmin = jmin.min(sgn * (ux * vy - uy * vx));
    };
    for i in 1..resolution {
        let r = i as f64 / resolution as f64;
        for j in 0..resolution {
            jac(r, theta_span * (j as f64 + 0.5) / resolution as f64);
        }
    }
    for j in 0..4 * resolution {
        jac(1.0, theta_span * (j as f64 + 0.5) / (4 * resolution) as f64);
    }
    let nodal_counts = [
        Some(nodal_count(&imm.fields[0], NODAL_GRID)),
        Some(nodal_count(&imm.fields[1], NODAL_GRID)),
        (!imm.planar).then(|| nodal_count(&imm.fields[2], NODAL_GRID)),
    ];
    Ok(EmbeddingReport { winding: degree.abs(), jacobian_min: jmin, nodal_counts })
}

/// (A, |L - 2A|/L) with A = (1/2) sum alpha_i^2 D(phi_i).
pub fn verify_area_identity(imm: &Immersion) -> (f64, f64) {
    let area = 0.5 * (0..3).map(|i| scaled_field(imm, i).dirichlet_energy()).sum::<f64>();
    let l = imm.boundary_length;
    (area, (l - 2.0 * area).abs() / l)
}

/// Every diagnostic in one record.
pub fn diagnostics(imm: &Immersion, weight: &BoundaryWeight, resolution: usize) -> Result<Diagnostics> {
    let emb = embedding_diagnostics(imm, resolution)?;
    let (area, area_mismatch) = verify_area_identity(imm);
    Ok(Diagnostics {
        ellipsoid_residual: imm.ellipsoid_residual,
        conformality_residual: verify_conformality(imm, resolution, 4 * resolution),
        min_boundary_speed: verify_no_boundary_branch(imm),
        jacobian_min: emb.jacobian_min,
        winding: emb.winding,
        nodal_counts: emb.nodal_counts,
        area,
        area_mismatch,
        critical_weight_mismatch: verify_critical_weight(imm, weight)?,
    })
}

/// Ellipsoid coordinates x = sqrt(sigma_2) Phi, so p x_0^2 + x_1^2 + x_2^2 = 1
/// on the boundary.
pub fn surface_point(imm: &Immersion, r: f64, theta: f64) -> [f64; 3] {
    let c = imm.sigma[1].sqrt();
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = c * imm.scalings[i] * eval_polar(&imm.fields[i], r, theta).0;
    }
    x
}

/// Writes `<stem>.obj` (triangulated polar grid, `resolution` rings of
/// 4 * resolution points) and `<stem>_boundary.csv` (theta,x0,x1,x2), each
/// preceded by the `header` lines as `#` comments.
pub fn export_surface(imm: &Immersion, resolution: usize, stem: &Path, header: &[String]) -> Result<()> {
    let res = resolution.max(1);
    let nt = 4 * res;
    let obj_path = stem.with_extension("obj");
    let mut obj = BufWriter::new(File::create(&obj_path)?);
    for h in header {
        writeln!(obj, "# {h}")?;
    }
    let center = surface_point(imm, 0.0, 0.0);
    writeln!(obj, "v {:.16e} {:.16e} {:.16e}", center[0], center[1], center[2])?;
    for i in 1..=res {
        let r = i as f64 / res as f64;
        for j in 0..nt {
            let x = surface_point(imm, r, 2.0 * PI * j as f64 / nt as f64);
            writeln!(obj, "v {:.16e} {:.16e} {:.16e}", x[0], x[1], x[2])?;
        }
    }
    let idx = |i: usize, j: usize| 2 + (i - 1) * nt + j % nt;
    for j in 0..nt {
        writeln!(obj, "f 1 {} {}", idx(1, j), idx(1, j + 1))?;
    }
    for i in 1..res {
        for j in 0..nt {
            let (a, b, c, d) = (idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j));
            writeln!(obj, "f {a} {b} {c}")?;
            writeln!(obj, "f {a} {c} {d}")?;
        }
    }
    obj.flush()?;

    let name = format!("{}_boundary.csv", stem.file_name().and_then(|s| s.to_str()).unwrap_or("surface"));
    let csv_path = stem.with_file_name(name);
    let mut csv = BufWriter::new(File::create(csv_path)?);
    for h in header {
        writeln!(csv, "# {h}")?;
    }
    writeln!(csv, "theta,x0,x1,x2")?;
    for j in 0..nt {
        let t = 2.0 * PI * j as f64 / nt as f64;
        let x = surface_point(imm, 1.0, t);
        writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", t, x[0], x[1], x[2])?;
    }
    csv.flush()?;
    Ok(())
}
