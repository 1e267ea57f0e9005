//! Minimization of E = h(sigmabar_1, sigmabar_2) over weights w = e^v with
//! v = sum_k c_k cos 2k theta, normalized to int w = 2 pi.
//!
//! sigma_2 may be double at a minimizer, so E is treated as the max of the
//! smooth pieces h(a, b) over pairs of tracked eigenvalue branches: a is the
//! sigma_1 branch and b ranges over branches close to sigmabar_2 (for t <= 1
//! all ordered pairs near the bottom of the spectrum, which also covers a
//! double sigma_1). Each step solves the local minimax model with finite
//! difference Hessians of the pieces (falling back to the min-norm
//! subgradient) and is accepted by a monotone Armijo line search.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{h_partials, h_value, FunctionalParams};
use crate::immersion::{build_immersion, mass_residuals};
use crate::linalg::{dot, norm, sym_eigen, Mat};
use crate::steklov::{solve_blocks, solve_spectrum, Block, BoundaryWeight, SteklovSpectrum};
use crate::trig::{project_samples, Parity, QuadratureGrid, TrigSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// number of cos 2k theta coefficients of v
    pub n_modes: usize,
    pub solver_n: usize,
    pub max_iters: usize,
    /// initial Armijo step for the subgradient direction
    pub step_init: f64,
    pub armijo_factor: f64,
    pub grad_tol: f64,
    pub mass_tol: f64,
    pub seed: u64,
    /// use the second-order minimax model
    pub newton: bool,
    /// relative window above sigmabar_2 for candidate second branches
    pub branch_window: f64,
    pub fd_step: f64,
    pub max_step_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n_modes: 32,
            solver_n: 128,
            max_iters: 200,
            step_init: 0.5,
            armijo_factor: 0.5,
            grad_tol: 1e-4,
            mass_tol: 1e-3,
            seed: 0,
            newton: true,
            branch_window: 0.05,
            fd_step: 1e-6,
            max_step_norm: 0.3,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::Domain("n_modes must be positive".into()));
        }
        if self.solver_n < 4 * self.n_modes {
            return Err(Error::Domain(format!(
                "solver_n = {} must be at least 4 n_modes = {}",
                self.solver_n,
                4 * self.n_modes
            )));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) || !(self.step_init > 0.0) {
            return Err(Error::Domain("line search needs step_init > 0 and armijo_factor in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    /// no decrease at the minimal step
    Stalled,
    /// spectrum failure; the last good iterate is returned
    SolveFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub sigma_bar_1: f64,
    pub sigma_bar_2: f64,
    pub subgrad_norm: f64,
    pub step: f64,
    pub active: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub weight: BoundaryWeight,
    /// c_1..c_n of v
    pub coeffs: Vec<f64>,
    pub spectrum: SteklovSpectrum,
    pub energy: f64,
    /// E of every accepted iterate, starting with the initial weight
    pub objective_trace: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub subgrad_norm: f64,
    /// None when the immersion could not be assembled
    pub mass_residuals: Option<(f64, f64)>,
    pub planarity_flag: bool,
    /// sigmabar_1 / sigmabar_2
    pub p: f64,
    /// sigmabar_2
    pub l: f64,
    pub status: Status,
    pub message: Option<String>,
    pub iterations: usize,
}

impl OptimizationResult {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn sigma_bar(&self, k: usize) -> f64 {
        self.spectrum.normalized(k)
    }

    /// Writes the iteration trace as CSV.
    pub fn write_trace_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "iter,energy,sigma_bar_1,sigma_bar_2,subgrad_norm,step,active")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.iter, r.energy, r.sigma_bar_1, r.sigma_bar_2, r.subgrad_norm, r.step, r.active
            )?;
        }
        Ok(())
    }
}

/// One eigenvalue branch with its gradient in c.
#[derive(Clone, Debug)]
struct Branch {
    sigma_bar: f64,
    grad: Vec<f64>,
    block: Block,
    index: usize,
}

/// Evaluation of the pieces at one coefficient vector: E is the max of
/// h(a, b) over the (a, b) branch pairs.
#[derive(Clone, Debug)]
struct Model {
    pairs: Vec<(Branch, Branch)>,
    sigma_bar_1: f64,
    sigma_bar_2: f64,
    energy: f64,
}

struct Problem<'a> {
    params: &'a FunctionalParams,
    config: &'a OptimizerConfig,
    grid: QuadratureGrid,
    cos_table: Vec<Vec<f64>>,
}

fn log_series(c: &[f64]) -> TrigSeries {
    let mut a = vec![0.0; 2 * c.len() + 1];
    for (k, v) in c.iter().enumerate() {
        a[2 * (k + 1)] = *v;
    }
    TrigSeries::cosine(a)
}

/// Normalized weight e^v / (int e^v / 2 pi) at degree 2N.
pub fn weight_from_coeffs(c: &[f64], solver_n: usize) -> Result<BoundaryWeight> {
    let w = BoundaryWeight::from_log(&log_series(c), 2 * solver_n)?;
    let l = w.length();
    w.scaled(2.0 * PI / l)
}

/// c_k of log w projected on cos 2k theta, k = 1..n.
pub fn coeffs_from_weight(weight: &BoundaryWeight, n_modes: usize) -> Result<Vec<f64>> {
    if weight.symmetry_class != Parity::EvenBoth {
        return Err(Error::Symmetry(format!("initial weight must be even_both, got {:?}", weight.symmetry_class)));
    }
    let deg = (2 * n_modes).max(weight.density.n_modes);
    let pts = (8 * deg + 8).next_power_of_two();
    let logs: Vec<f64> = weight.density.grid_values(pts).iter().map(|v| v.ln()).collect();
    let v = project_samples(&logs, 2 * n_modes)?;
    Ok((1..=n_modes).map(|k| v.cos_coeffs[2 * k]).collect())
}

impl<'a> Problem<'a> {
    fn new(params: &'a FunctionalParams, config: &'a OptimizerConfig) -> Self {
        let n = config.solver_n;
        let grid = QuadratureGrid::with_points((2 * (4 * n + 2 * config.n_modes) + 2).next_power_of_two());
        let cos_table =
            (1..=config.n_modes).map(|k| grid.angles().iter().map(|t| (2.0 * k as f64 * t).cos()).collect()).collect();
        Problem { params, config, grid, cos_table }
    }

    /// All branches of the low spectrum with d sigmabar / d c_k
    /// = sigmabar int (1/L - phi^2) w cos 2k theta.
    fn branches(&self, c: &[f64]) -> Result<Vec<Branch>> {
        let weight = weight_from_coeffs(c, self.config.solver_n)?;
        let l = weight.length();
        let m = self.grid.n_points;
        let wv = weight.density.grid_values(m);
        let blocks = solve_blocks(&weight, self.config.solver_n, 3)?;
        let mut out = Vec::new();
        for bs in blocks {
            for (i, (s, tr)) in bs.sigmas.iter().zip(&bs.traces).enumerate() {
                if *s < 1e-9 {
                    continue;
                }
                let sb = s * l;
                let phi = tr.grid_values(m);
                let dens: Vec<f64> = phi.iter().zip(&wv).map(|(p, w)| (1.0 / l - p * p) * w).collect();
                let grad = self
                    .cos_table
                    .iter()
                    .map(|row| sb * self.grid.integrate(&row.iter().zip(&dens).map(|(a, b)| a * b).collect::<Vec<_>>()))
                    .collect();
                out.push(Branch { sigma_bar: sb, grad, block: bs.block, index: i });
            }
        }
        out.sort_by(|a, b| a.sigma_bar.total_cmp(&b.sigma_bar).then(a.block.cmp(&b.block)));
        Ok(out)
    }

    fn model(&self, c: &[f64]) -> Result<Model> {
        let br = self.branches(c)?;
        if br.len() < 2 {
            return Err(Error::Resolution("fewer than two nonzero eigenvalues".into()));
        }
        let (s1, s2) = (br[0].sigma_bar, br[1].sigma_bar);
        let win = 1.0 + self.config.branch_window;
        let pairs = if self.params.t <= 1.0 && br[1].sigma_bar <= s1 * win {
            // h(x, y) >= h(y, x) for x <= y, so the max over ordered pairs of
            // nearby branches is h(sigmabar_1, sigmabar_2) even when sigma_1
            // is multiple
            let near: Vec<&Branch> = br.iter().filter(|b| b.sigma_bar <= s2 * win).collect();
            let mut v = Vec::new();
            for (i, a) in near.iter().enumerate() {
                for (j, b) in near.iter().enumerate() {
                    if i != j {
                        v.push(((*a).clone(), (*b).clone()));
                    }
                }
            }
            v
        } else {
            br[1..].iter().filter(|b| b.sigma_bar <= s2 * win).map(|b| (br[0].clone(), b.clone())).collect()
        };
        let energy = h_value(self.params, s1, s2)?;
        Ok(Model { pairs, sigma_bar_1: s1, sigma_bar_2: s2, energy })
    }

    fn piece(&self, a: &Branch, b: &Branch) -> (f64, Vec<f64>) {
        let (d1, d2) = h_partials(self.params, a.sigma_bar, b.sigma_bar);
        let v = h_value(self.params, a.sigma_bar, b.sigma_bar).unwrap_or(f64::INFINITY);
        (v, a.grad.iter().zip(&b.grad).map(|(x, y)| d1 * x + d2 * y).collect())
    }
}

fn find<'b>(br: &'b [Branch], key: &Branch) -> Option<&'b Branch> {
    br.iter().find(|b| b.block == key.block && b.index == key.index)
}

/// Min-norm point of the convex hull of `g` by projected gradient on the
/// simplex; returns (weights, point).
pub fn min_norm_hull(g: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = g.len();
    let combo = |lam: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; g[0].len()];
        for (l, gi) in lam.iter().zip(g) {
            v.iter_mut().zip(gi).for_each(|(a, b)| *a += l * b);
        }
        v
    };
    if m == 1 {
        return (vec![1.0], g[0].clone());
    }
    if m == 2 {
        let d: Vec<f64> = g[0].iter().zip(&g[1]).map(|(a, b)| a - b).collect();
        let dd = dot(&d, &d);
        let l = if dd > 0.0 { (-dot(&g[1], &d) / dd).clamp(0.0, 1.0) } else { 0.5 };
        let lam = vec![l, 1.0 - l];
        let v = combo(&lam);
        return (lam, v);
    }
    let gram = Mat::from_fn(m, m, |i, j| dot(&g[i], &g[j]));
    let step = 1.0 / (gram.max_abs() * m as f64).max(1e-300);
    let mut lam = vec![1.0 / m as f64; m];
    for _ in 0..5000 {
        let grad = gram.mul_vec(&lam);
        let y: Vec<f64> = lam.iter().zip(&grad).map(|(l, g)| l - step * g).collect();
        let next = project_simplex(&y);
        let diff = next.iter().zip(&lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        lam = next;
        if diff < 1e-15 {
            break;
        }
    }
    let v = combo(&lam);
    (lam, v)
}

fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, v) in u.iter().enumerate() {
        css += v;
        let t = (css - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Inverse of a symmetric matrix after flooring its eigenvalues at
/// 1e-3 of the largest.
fn floored_inverse(h: &Mat) -> Mat {
    let se = sym_eigen(h);
    let top = se.values.iter().cloned().fold(1e-6, f64::max);
    let n = h.rows;
    Mat::from_fn(n, n, |i, j| se.values.iter().zip(&se.vectors).map(|(l, v)| v[i] * v[j] / l.max(1e-3 * top)).sum())
}

/// Direction of the local minimax model min_d max_j F_j + g_j.d + d.H_j d/2.
fn minimax_direction(values: &[f64], grads: &[Vec<f64>], hess: &[Mat]) -> Vec<f64> {
    let m = values.len();
    let mut lam = vec![1.0 / m as f64; m];
    let mut hinv = floored_inverse(&combine(hess, &lam));
    for _ in 0..30 {
        let next = if m == 2 {
            let d: Vec<f64> = grads[0].iter().zip(&grads[1]).map(|(a, b)| a - b).collect();
            let hd = hinv.mul_vec(&d);
            let den = dot(&d, &hd);
            let l =
                if den > 0.0 { (((values[0] - values[1]) - dot(&grads[1], &hd)) / den).clamp(0.0, 1.0) } else { 0.5 };
            vec![l, 1.0 - l]
        } else {
            // dual ascent on q(lam) = sum lam_j F_j - g_lam.H^{-1} g_lam / 2
            let mut l = lam.clone();
            for _ in 0..200 {
                let g = combine_vec(grads, &l);
                let hg = hinv.mul_vec(&g);
                let grad: Vec<f64> = (0..m).map(|j| values[j] - dot(&grads[j], &hg)).collect();
                l = project_simplex(&l.iter().zip(&grad).map(|(a, b)| a + 0.1 * b).collect::<Vec<_>>());
            }
            l
        };
        let diff = next.iter().zip(&lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        lam = next;
        hinv = floored_inverse(&combine(hess, &lam));
        if diff < 1e-12 {
            break;
        }
    }
    let g = combine_vec(grads, &lam);
    hinv.mul_vec(&g).into_iter().map(|v| -v).collect()
}

fn combine(h: &[Mat], lam: &[f64]) -> Mat {
    let n = h[0].rows;
    Mat::from_fn(n, n, |i, j| h.iter().zip(lam).map(|(m, l)| l * m[(i, j)]).sum())
}

fn combine_vec(g: &[Vec<f64>], lam: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; g[0].len()];
    for (l, gi) in lam.iter().zip(g) {
        v.iter_mut().zip(gi).for_each(|(a, b)| *a += l * b);
    }
    v
}

/// Pieces within this relative gap of E enter the subgradient norm.
pub const ACTIVE_TOL: f64 = 1e-6;

struct Step {
    direction: Vec<f64>,
    subgrad_norm: f64,
    slope: f64,
    newton: bool,
}

impl<'a> Problem<'a> {
    /// Min-norm element of the hull of the active piece gradients.
    fn min_norm_active(&self, model: &Model) -> Vec<f64> {
        let grads: Vec<Vec<f64>> = model
            .pairs
            .iter()
            .map(|(a, b)| self.piece(a, b))
            .filter(|p| p.0 >= model.energy - ACTIVE_TOL * model.energy.abs())
            .map(|p| p.1)
            .collect();
        min_norm_hull(&grads).1
    }

    fn subgrad(&self, model: &Model) -> f64 {
        norm(&self.min_norm_active(model))
    }

    fn gradient_step(&self, model: &Model) -> Step {
        let mn = self.min_norm_active(model);
        Step {
            direction: mn.iter().map(|v| -v).collect(),
            subgrad_norm: norm(&mn),
            slope: -dot(&mn, &mn),
            newton: false,
        }
    }

    fn step(&self, c: &[f64], model: &Model) -> Result<Step> {
        let pieces: Vec<(f64, Vec<f64>)> = model.pairs.iter().map(|(a, b)| self.piece(a, b)).collect();
        let subgrad_norm = self.subgrad(model);
        let grads: Vec<Vec<f64>> = pieces.iter().map(|p| p.1.clone()).collect();
        let fallback = || self.gradient_step(model);
        if !self.config.newton {
            return Ok(fallback());
        }
        let n = c.len();
        let h = self.config.fd_step;
        let mut hess: Vec<Mat> = vec![Mat::zeros(n, n); pieces.len()];
        for k in 0..n {
            let mut cp = c.to_vec();
            cp[k] += h;
            let br = match self.branches(&cp) {
                Ok(b) => b,
                Err(_) => return Ok(fallback()),
            };
            for (j, (a, b)) in model.pairs.iter().enumerate() {
                let (Some(ap), Some(bp)) = (find(&br, a), find(&br, b)) else { return Ok(fallback()) };
                let gp = self.piece(ap, bp).1;
                for i in 0..n {
                    hess[j][(i, k)] = (gp[i] - pieces[j].1[i]) / h;
                }
            }
        }
        for m in hess.iter_mut() {
            *m = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        }
        let values: Vec<f64> = pieces.iter().map(|p| p.0).collect();
        let mut d = minimax_direction(&values, &grads, &hess);
        let dn = norm(&d);
        if dn > self.config.max_step_norm {
            d.iter_mut().for_each(|v| *v *= self.config.max_step_norm / dn);
        }
        let slope = grads.iter().map(|g| dot(g, &d)).fold(f64::NEG_INFINITY, f64::max);
        if !d.iter().all(|v| v.is_finite()) {
            return Ok(fallback());
        }
        Ok(Step { direction: d, subgrad_norm, slope, newton: true })
    }
}

/// Armijo backtracking; only non-increasing E is accepted and failed
/// solves count as rejected steps.
fn line_search(prob: &Problem, c: &[f64], model: &Model, step: &Step) -> (f64, Option<(Vec<f64>, Model)>) {
    let config = prob.config;
    let mut t = if step.newton { 1.0 } else { config.step_init };
    while t > 1e-10 {
        let cn: Vec<f64> = c.iter().zip(&step.direction).map(|(a, d)| a + t * d).collect();
        if let Ok(mn) = prob.model(&cn) {
            if mn.energy <= model.energy + 1e-4 * t * step.slope.min(0.0) || mn.energy < model.energy {
                return (t, Some((cn, mn)));
            }
        }
        t *= config.armijo_factor;
    }
    (t, None)
}

fn quarter_turn(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(i, v)| if (i + 1) % 2 == 1 { -v } else { *v }).collect()
}

/// Subgradient minimization of E from an even_both initial weight.
pub fn minimize(
    params: &FunctionalParams,
    config: &OptimizerConfig,
    initial: &BoundaryWeight,
) -> Result<OptimizationResult> {
    config.validate()?;
    let c0 = coeffs_from_weight(initial, config.n_modes)?;
    minimize_from_coeffs(params, config, &c0)
}

pub fn minimize_from_coeffs(
    params: &FunctionalParams,
    config: &OptimizerConfig,
    c0: &[f64],
) -> Result<OptimizationResult> {
    config.validate()?;
    if c0.len() != config.n_modes {
        return Err(Error::Domain(format!("{} coefficients for n_modes = {}", c0.len(), config.n_modes)));
    }
    let prob = Problem::new(params, config);
    let mut c = c0.to_vec();
    let mut model = prob.model(&c)?;
    let mut trace = vec![model.energy];
    let mut records = Vec::new();
    let mut status = Status::MaxIters;
    let mut message = None;
    let mut subgrad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..config.max_iters {
        let step = match prob.step(&c, &model) {
            Ok(s) => s,
            Err(e) => {
                status = Status::SolveFailed;
                message = Some(e.to_string());
                break;
            }
        };
        subgrad_norm = step.subgrad_norm;
        let mut rec = IterationRecord {
            iter: it,
            energy: model.energy,
            sigma_bar_1: model.sigma_bar_1,
            sigma_bar_2: model.sigma_bar_2,
            subgrad_norm,
            step: 0.0,
            active: model.pairs.len(),
        };
        if subgrad_norm <= config.grad_tol {
            records.push(rec);
            status = Status::Converged;
            break;
        }
        let (mut t, mut accepted) = line_search(&prob, &c, &model, &step);
        if accepted.is_none() && step.newton {
            (t, accepted) = line_search(&prob, &c, &model, &prob.gradient_step(&model));
        }
        rec.step = t;
        records.push(rec);
        match accepted {
            Some((cn, mn)) => {
                c = cn;
                model = mn;
                trace.push(model.energy);
                iterations += 1;
            }
            None => {
                status = Status::Stalled;
                message = Some(format!("no decrease along the search direction at E = {:.12}", model.energy));
                break;
            }
        }
    }
    if status == Status::MaxIters {
        subgrad_norm = prob.subgrad(&model);
        if subgrad_norm <= config.grad_tol {
            status = Status::Converged;
        }
    }
    finish(params, config, c, trace, records, subgrad_norm, status, message, iterations)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: &FunctionalParams,
    config: &OptimizerConfig,
    mut c: Vec<f64>,
    objective_trace: Vec<f64>,
    records: Vec<IterationRecord>,
    subgrad_norm: f64,
    status: Status,
    message: Option<String>,
    iterations: usize,
) -> Result<OptimizationResult> {
    let n = config.solver_n;
    let mut weight = weight_from_coeffs(&c, n)?;
    let mut spectrum = solve_spectrum(&weight, n, 8)?;
    let simple = (spectrum.sigmas[2] - spectrum.sigmas[1]) > 1e-9 * spectrum.sigmas[1];
    if simple && spectrum.blocks[1] == Some(Block::CosOdd) {
        c = quarter_turn(&c);
        weight = weight_from_coeffs(&c, n)?;
        spectrum = solve_spectrum(&weight, n, 8)?;
    }
    let energy = h_value(params, spectrum.normalized(1), spectrum.normalized(2))?;
    let (mass, planar) = match build_immersion(&spectrum) {
        Ok(imm) => (Some(mass_residuals(&imm, params)), imm.planar),
        Err(_) => (None, true),
    };
    Ok(OptimizationResult {
        p: spectrum.normalized(1) / spectrum.normalized(2),
        l: spectrum.normalized(2),
        weight,
        coeffs: c,
        energy,
        objective_trace,
        records,
        subgrad_norm,
        mass_residuals: mass,
        planarity_flag: planar,
        spectrum,
        status,
        message,
        iterations,
    })
}

/// Relative deviations of the two mass identities for the result's
/// immersion.
pub fn criticality_residuals(result: &OptimizationResult, params: &FunctionalParams) -> Result<(f64, f64)> {
    let imm = build_immersion(&result.spectrum)?;
    Ok(mass_residuals(&imm, params))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub sigma_bar_1: f64,
    pub sigma_bar_2: f64,
    pub p: f64,
    pub l: f64,
    pub energy: f64,
    /// sigmabar_1 ln t / (2 pi)
    pub sigma1_log_scaled: f64,
    pub subgrad_norm: f64,
    pub status: Status,
    /// monotonicity violated against the previous row
    pub flagged: bool,
}

pub const SWEEP_SLACK: f64 = 1e-6;

/// Warm-started minimizations along an ascending t grid.
pub fn sweep_t(s: f64, t_grid: &[f64], config: &OptimizerConfig, initial: &BoundaryWeight) -> Result<Vec<SweepRow>> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("t grid must be strictly ascending".into()));
    }
    let mut c = coeffs_from_weight(initial, config.n_modes)?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let params = FunctionalParams::new(s, t)?;
        let res = minimize_from_coeffs(&params, config, &c)?;
        c = res.coeffs.clone();
        let (s1, s2) = (res.sigma_bar(1), res.sigma_bar(2));
        let flagged = rows
            .last()
            .map(|prev: &SweepRow| s1 > prev.sigma_bar_1 + SWEEP_SLACK || s2 < prev.sigma_bar_2 - SWEEP_SLACK)
            .unwrap_or(false);
        rows.push(SweepRow {
            t,
            sigma_bar_1: s1,
            sigma_bar_2: s2,
            p: res.p,
            l: res.l,
            energy: res.energy,
            sigma1_log_scaled: s1 * t.ln() / (2.0 * PI),
            subgrad_norm: res.subgrad_norm,
            status: res.status,
            flagged,
        });
    }
    Ok(rows)
}
