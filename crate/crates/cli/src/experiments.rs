use std::f64::consts::PI;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};
use steklov_core::ellipse::{compute_indices, default_resolution, estimate_theta_star, IndexResult};
use steklov_core::immersion::{build_immersion, diagnostics, Diagnostics, Immersion};
use steklov_core::optimizer::{minimize_from_coeffs, sweep_t, weight_from_coeffs, OptimizationResult, Status};
use steklov_core::steklov::{solve_spectrum, Block};
use steklov_core::test_metrics::{family_row, min_resolution, rayleigh_upper_bounds, sigma1_fit, sigma2_fit};
use steklov_core::{BoundaryWeight, TrigSeries};

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;
use crate::output::{f17, to_json, Artifacts};

/// Artifacts of a finished run and the invariant violations it flagged.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub violations: Vec<String>,
}

fn block_name(b: Option<Block>) -> String {
    b.map(|b| format!("{b:?}")).unwrap_or_default()
}

pub fn run(command: Command, cfg: &RunConfig, hash: &str, pool: &ThreadPool) -> Result<Outcome, CliError> {
    let mut art = Artifacts::new(command.name(), hash);
    let violations = match command {
        Command::Spectrum => spectrum(cfg, &mut art)?,
        Command::Optimize => optimize(cfg, &mut art, false)?,
        Command::Export => optimize(cfg, &mut art, true)?,
        Command::Sweep => sweep(cfg, &mut art)?,
        Command::Testfamily => testfamily(cfg, &mut art, pool)?,
        Command::Ellipse => ellipse(cfg, &mut art, pool)?,
        Command::Thetastar => thetastar(cfg, &mut art)?,
    };
    Ok(Outcome { artifacts: art, violations })
}

fn spectrum(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let density = TrigSeries::new(cfg.weight.cos.clone(), cfg.weight.sin.clone());
    let weight = BoundaryWeight::new(density)?;
    let spec = solve_spectrum(&weight, cfg.solver_n, cfg.k_max)?;
    if cfg.wants(Format::Csv) {
        let rows = (0..spec.sigmas.len())
            .map(|k| vec![k.to_string(), f17(spec.sigmas[k]), f17(spec.normalized(k)), block_name(spec.blocks[k])])
            .collect();
        art.csv("spectrum.csv", &["k", "sigma", "sigma_bar", "block"], rows);
    }
    if cfg.wants(Format::Json) {
        art.json(
            "spectrum.json",
            json!({
                "solver_n": cfg.solver_n,
                "parity": to_json(&weight.symmetry_class),
                "length": to_json(&spec.boundary_length),
                "sigmas": to_json(&spec.sigmas),
                "sigma_bars": to_json(&spec.normalized_all()),
                "blocks": to_json(&spec.blocks),
            }),
        );
    }
    Ok(Vec::new())
}

fn initial_coeffs(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let n = cfg.optimizer.n_modes;
    if cfg.initial_log_coeffs.len() > n {
        return Err(CliError::Config(format!(
            "{} initial coefficients exceed optimizer.n_modes = {n}",
            cfg.initial_log_coeffs.len()
        )));
    }
    let mut c = cfg.initial_log_coeffs.clone();
    c.resize(n, 0.0);
    Ok(c)
}

fn status_violations(res: &OptimizationResult, mass_tol: f64) -> Vec<String> {
    let mut v = Vec::new();
    if res.status != Status::Converged {
        v.push(format!("optimizer stopped with status {:?}: {}", res.status, res.message.clone().unwrap_or_default()));
    }
    if let Some((a, b)) = res.mass_residuals {
        if a.max(b) > mass_tol {
            v.push(format!("mass residuals ({a:e}, {b:e}) exceed {mass_tol:e}"));
        }
    }
    v
}

fn optimize(cfg: &RunConfig, art: &mut Artifacts, export: bool) -> Result<Vec<String>, CliError> {
    let params = cfg.functional_params()?;
    let res = minimize_from_coeffs(&params, &cfg.optimizer, &initial_coeffs(cfg)?)?;
    let mut violations = status_violations(&res, cfg.optimizer.mass_tol);
    let immersion: Option<Immersion> = build_immersion(&res.spectrum).ok();
    let diag: Option<Diagnostics> = match &immersion {
        Some(imm) => Some(diagnostics(imm, &res.weight, cfg.export_resolution)?),
        None => None,
    };
    if export && immersion.is_none() {
        violations.push("no immersion could be assembled from the optimized spectrum".into());
    }
    let (s, t) = (params.s, params.t);
    let name = if export { "export" } else { "optimize" };
    if cfg.wants(Format::Json) {
        art.json(
            &format!("{name}.json"),
            json!({
                "params": to_json(&params),
                "status": to_json(&res.status),
                "message": res.message,
                "iterations": res.iterations,
                "energy": to_json(&res.energy),
                "sigma_bar_1": to_json(&res.sigma_bar(1)),
                "sigma_bar_2": to_json(&res.sigma_bar(2)),
                "p": to_json(&res.p),
                "l": to_json(&res.l),
                "subgrad_norm": to_json(&res.subgrad_norm),
                "mass_residuals": to_json(&res.mass_residuals),
                "planarity_flag": res.planarity_flag,
                "planar_candidates": {
                    "ellipse": to_json(&((2.0 * t.sqrt()).powf(1.0 / s) / (2.0 * PI))),
                    "flat": to_json(&((1.0 + t).powf(1.0 / s) / (2.0 * PI))),
                },
                "coeffs": to_json(&res.coeffs),
                "diagnostics": to_json(&diag),
            }),
        );
    }
    if cfg.wants(Format::Csv) {
        let rows = res
            .records
            .iter()
            .map(|r| {
                vec![
                    r.iter.to_string(),
                    f17(r.energy),
                    f17(r.sigma_bar_1),
                    f17(r.sigma_bar_2),
                    f17(r.subgrad_norm),
                    f17(r.step),
                    r.active.to_string(),
                ]
            })
            .collect();
        art.csv(
            &format!("{name}_trace.csv"),
            &["iter", "energy", "sigma_bar_1", "sigma_bar_2", "subgrad_norm", "step", "active"],
            rows,
        );
    }
    if export && cfg.wants(Format::Obj) {
        if let Some(imm) = immersion {
            art.surface("surface", imm, cfg.export_resolution);
        }
    }
    Ok(violations)
}

fn sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let initial = weight_from_coeffs(&initial_coeffs(cfg)?, cfg.optimizer.solver_n)?;
    let rows = sweep_t(cfg.params.s, &cfg.grids.t, &cfg.optimizer, &initial)?;
    let mut violations = Vec::new();
    for r in &rows {
        if r.status != Status::Converged {
            violations.push(format!("t = {}: status {:?}", r.t, r.status));
        }
        if r.flagged {
            violations.push(format!("t = {}: monotonicity violated", r.t));
        }
    }
    if cfg.wants(Format::Csv) {
        let csv = rows
            .iter()
            .map(|r| {
                vec![
                    f17(r.t),
                    f17(r.sigma_bar_1),
                    f17(r.sigma_bar_2),
                    f17(r.p),
                    f17(r.l),
                    f17(r.energy),
                    f17(r.sigma1_log_scaled),
                    f17(r.subgrad_norm),
                    to_json(&r.status).as_str().unwrap_or_default().to_string(),
                    r.flagged.to_string(),
                ]
            })
            .collect();
        art.csv(
            "sweep.csv",
            &[
                "t",
                "sigma_bar_1",
                "sigma_bar_2",
                "p",
                "l",
                "energy",
                "sigma1_log_scaled",
                "subgrad_norm",
                "status",
                "flagged",
            ],
            csv,
        );
    }
    if cfg.wants(Format::Json) {
        art.json("sweep.json", json!({ "s": to_json(&cfg.params.s), "rows": to_json(&rows) }));
    }
    Ok(violations)
}

fn testfamily(cfg: &RunConfig, art: &mut Artifacts, pool: &ThreadPool) -> Result<Vec<String>, CliError> {
    let points: Vec<_> = pool.install(|| {
        cfg.grids
            .epsilon
            .par_iter()
            .map(|&e| (family_row(e, min_resolution(e).max(16)), rayleigh_upper_bounds(e)))
            .collect()
    });
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    for (row, b) in points {
        rows.push(row);
        bounds.push(b?);
    }
    let mut violations = Vec::new();
    for (r, b) in rows.iter().zip(&bounds) {
        if let Some(f) = &r.failure {
            violations.push(format!("eps = {}: {f}", r.epsilon));
            continue;
        }
        if (r.length - 4.0 * PI).abs() > 1e-9 {
            violations.push(format!("eps = {}: length {} differs from 4 pi", r.epsilon, r.length));
        }
        if r.sigma_1 > b.rq_f1 || r.sigma_2 > b.sigma2_bound() {
            violations.push(format!("eps = {}: Rayleigh upper bound exceeded", r.epsilon));
        }
    }
    let slope = sigma2_fit(&rows).slope;
    let fit = sigma1_fit(&rows).fit;
    let target = -16.0 * PI;
    if cfg.wants(Format::Csv) {
        let csv = rows
            .iter()
            .zip(&bounds)
            .map(|(r, b)| {
                vec![
                    f17(r.epsilon),
                    r.n_modes.to_string(),
                    f17(r.length),
                    f17(r.sigma_1),
                    f17(r.sigma_2),
                    f17(r.sigma_bar_1),
                    f17(r.sigma_bar_2),
                    block_name(r.block_1),
                    block_name(r.block_2),
                    f17(r.sigma1_scaled()),
                    f17(r.sigma2_defect()),
                    f17(b.rq_f1),
                    f17(b.rq_f2),
                ]
            })
            .collect();
        art.csv(
            "testfamily.csv",
            &[
                "epsilon",
                "n_modes",
                "length",
                "sigma_1",
                "sigma_2",
                "sigma_bar_1",
                "sigma_bar_2",
                "block_1",
                "block_2",
                "sigma1_scaled",
                "sigma2_defect",
                "rq_f1",
                "rq_f2",
            ],
            csv,
        );
    }
    if cfg.wants(Format::Json) {
        art.json(
            "testfamily.json",
            json!({
                "rows": to_json(&rows),
                "rayleigh": to_json(&bounds),
                "sigma2_slope": to_json(&slope),
                "sigma2_slope_target": to_json(&target),
                "sigma2_slope_relative_deviation": to_json(&slope.map(|s| (s - target).abs() / target.abs())),
                "sigma1_fit": to_json(&fit),
            }),
        );
    }
    Ok(violations)
}

fn ellipse(cfg: &RunConfig, art: &mut Artifacts, pool: &ThreadPool) -> Result<Vec<String>, CliError> {
    let results: Vec<_> =
        pool.install(|| cfg.grids.p.par_iter().map(|&p| compute_indices(p, default_resolution(p))).collect());
    let rows: Vec<IndexResult> = results.into_iter().collect::<Result<_, _>>()?;
    let product_dev = |r: &IndexResult| (r.matched_low * r.matched_high - 4.0 * PI * PI).abs() / (4.0 * PI * PI);
    if cfg.wants(Format::Csv) {
        let csv = rows
            .iter()
            .map(|r| {
                vec![
                    f17(r.p),
                    r.k1.to_string(),
                    r.k2.to_string(),
                    f17(r.sigma_bar_low),
                    f17(r.sigma_bar_high),
                    f17(r.matched_low),
                    f17(r.matched_high),
                    f17(product_dev(r)),
                    f17(r.map_residual),
                    r.n_modes.to_string(),
                ]
            })
            .collect();
        art.csv(
            "ellipse.csv",
            &[
                "p",
                "k1",
                "k2",
                "sigma_bar_low",
                "sigma_bar_high",
                "matched_low",
                "matched_high",
                "product_deviation",
                "map_residual",
                "n_modes",
            ],
            csv,
        );
    }
    if cfg.wants(Format::Json) {
        art.json("ellipse.json", json!({ "rows": to_json(&rows) }));
    }
    Ok(Vec::new())
}

fn thetastar(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<String>, CliError> {
    let report = estimate_theta_star(cfg.theta_star_tolerance)?;
    let mut violations = Vec::new();
    if report.multivalued {
        violations.push("index k2 is not monotone in the axis ratio".into());
    }
    if cfg.wants(Format::Csv) {
        let csv = report.scan.iter().map(|(r, k)| vec![f17(*r), k.to_string()]).collect();
        art.csv("thetastar.csv", &["ratio", "k2"], csv);
    }
    if cfg.wants(Format::Json) {
        art.json("thetastar.json", to_json(&report));
    }
    Ok(violations)
}

pub fn summary(command: Command, hash: &str, files: &[String]) -> Value {
    json!({ "status": "ok", "command": command.name(), "config_hash": hash, "files": files })
}
