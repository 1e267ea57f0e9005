//! Fast built-in checks: closed forms, invariants and internal oracle
//! equivalences. The report has no timings so repeated runs are identical.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov_core::ellipse::compute_indices;
use steklov_core::functional::{directional_derivative, evaluate_e, subgradient};
use steklov_core::immersion::build_immersion;
use steklov_core::linalg::{generalized_eigen, generalized_eigen_diag, Mat};
use steklov_core::optimizer::{minimize_from_coeffs, OptimizerConfig};
use steklov_core::steklov::{solve_full, solve_spectrum};
use steklov_core::test_metrics::{family_row, min_resolution, omega_eps_weight, rayleigh_upper_bounds};
use steklov_core::{BoundaryWeight, FunctionalParams, TrigSeries};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

type Check = Result<(bool, String), CliError>;

struct Ctx {
    n: usize,
    seed: u64,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }
}

fn log_series(r: &mut impl Rng, modes: usize, amp: f64) -> TrigSeries {
    let mut a = vec![0.0; 2 * modes + 1];
    for k in 1..=modes {
        a[2 * k] = r.gen_range(-amp..amp) / k as f64;
    }
    TrigSeries::cosine(a)
}

fn random_weight(r: &mut impl Rng) -> Result<BoundaryWeight, CliError> {
    Ok(BoundaryWeight::from_log(&log_series(r, 4, 0.8), 32)?)
}

fn flat_disk(c: &Ctx) -> Check {
    let s = solve_spectrum(&BoundaryWeight::flat(), c.n, 8)?;
    let err = s.sigmas.iter().enumerate().map(|(k, x)| (x - ((k + 1) / 2) as f64).abs()).fold(0.0, f64::max);
    let e1 = (s.normalized(1) - 2.0 * PI).abs().max((s.normalized(2) - 2.0 * PI).abs());
    Ok((err <= 1e-10 && e1 <= 1e-9, format!("max error {err:.1e}, sigmabar_1,2 off 2 pi by {e1:.1e}")))
}

fn constant_weight(c: &Ctx) -> Check {
    let s = solve_spectrum(&BoundaryWeight::constant(3.0)?, c.n, 6)?;
    let err = s.sigmas.iter().enumerate().map(|(k, x)| (x - ((k + 1) / 2) as f64 / 3.0).abs()).fold(0.0, f64::max);
    Ok((err <= 1e-10, format!("max error {err:.1e}")))
}

fn scale_invariance(c: &Ctx) -> Check {
    let mut r = c.rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w = random_weight(&mut r)?;
        let k = r.gen_range(0.1..10.0);
        let a = solve_spectrum(&w, c.n, 8)?;
        let b = solve_spectrum(&w.scaled(k)?, c.n, 8)?;
        for j in 1..=8 {
            worst = worst.max((a.normalized(j) - b.normalized(j)).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.1e} over 20 weights")))
}

fn inequalities(c: &Ctx) -> Check {
    let mut r = c.rng(2);
    let (mut m1, mut m2, mut hps) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let s = solve_spectrum(&random_weight(&mut r)?, c.n, 4)?;
        let (a, b) = (s.normalized(1), s.normalized(2));
        m1 = m1.max(a);
        m2 = m2.max(b);
        hps = hps.min(1.0 / a + 1.0 / b - 1.0 / PI);
    }
    Ok((
        m1 <= 2.0 * PI + 1e-6 && m2 < 4.0 * PI && hps >= -1e-8,
        format!("max sigmabar_1 {m1:.6}, max sigmabar_2 {m2:.6}, min hps margin {hps:.1e}"),
    ))
}

fn blocks_match_full(c: &Ctx) -> Check {
    let mut r = c.rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let w = random_weight(&mut r)?;
        let a = solve_spectrum(&w, c.n, 8)?;
        let b = solve_full(&w, c.n, 8)?;
        for (x, y) in a.sigmas.iter().zip(&b.sigmas) {
            worst = worst.max((x - y).abs() / y.max(1.0));
        }
    }
    Ok((worst <= 1e-9, format!("blockwise vs dense {worst:.1e}")))
}

fn eigensolver_paths(c: &Ctx) -> Check {
    let mut r = c.rng(4);
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let entries: Vec<f64> = (0..n * n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let g = Mat::from_fn(n, n, |i, j| entries[i * n + j]);
        let b = g.transpose().matmul(&g);
        let b = Mat::from_fn(n, n, |i, j| b[(i, j)] + if i == j { 1.0 } else { 0.0 });
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..5.0)).collect();
        let dense = generalized_eigen(&Mat::from_diag(&a), &b)?;
        let diag = generalized_eigen_diag(&a, &b, n)?;
        for (x, y) in dense.values.iter().zip(&diag.values) {
            worst = worst.max((x - y).abs() / y.abs().max(1.0));
        }
    }
    Ok((worst <= 1e-10, format!("dense vs diagonal-stiffness {worst:.1e}")))
}

fn subgradient_fd(c: &Ctx) -> Check {
    let params = FunctionalParams::new(1.0, 8.0)?;
    let mut r = c.rng(5);
    let h = 1e-5;
    let (mut worst, mut done, mut tries) = (0.0f64, 0, 0);
    while done < 3 && tries < 50 {
        tries += 1;
        let v = log_series(&mut r, 3, 0.6);
        let dv = log_series(&mut r, 3, 1.0);
        let w = BoundaryWeight::from_log(&v, 32)?;
        let (_, spec) = evaluate_e(&w, &params, c.n)?;
        let s = &spec.sigmas;
        if ((s[2] - s[1]) / s[2]).min((s[3] - s[2]) / s[3]) <= 1e-4 {
            continue;
        }
        let shifted = |t: f64| -> Result<f64, CliError> {
            let mut a = v.cos_coeffs.clone();
            a.iter_mut().zip(&dv.cos_coeffs).for_each(|(x, y)| *x += t * y);
            let wv = BoundaryWeight::from_log(&TrigSeries::cosine(a), 32)?;
            Ok(evaluate_e(&wv, &params, c.n)?.0)
        };
        let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
        let an = directional_derivative(&w, &subgradient(&w, &spec, &params)?, &dv);
        worst = worst.max((fd - an).abs() / fd.abs());
        done += 1;
    }
    Ok((done == 3 && worst <= 1e-4, format!("{done} weights, max relative mismatch {worst:.1e}")))
}

fn ellipse_closed_form(c: &Ctx) -> Check {
    let p = 0.6;
    let r = compute_indices(p, c.n)?;
    let lo = (r.matched_low - 2.0 * PI * p.sqrt()).abs();
    let hi = (r.matched_high - 2.0 * PI / p.sqrt()).abs();
    let prod = (r.matched_low * r.matched_high - 4.0 * PI * PI).abs() / (4.0 * PI * PI);
    Ok((lo.max(hi) <= 1e-4 && prod <= 1e-6, format!("p = 0.6: errors ({lo:.1e}, {hi:.1e}), product {prod:.1e}")))
}

fn test_family(_: &Ctx) -> Check {
    let eps = 0.03;
    let n = min_resolution(eps).max(16);
    let len = omega_eps_weight(eps, n)?.weight.length();
    let row = family_row(eps, n);
    if let Some(f) = row.failure {
        return Ok((false, f));
    }
    let b = rayleigh_upper_bounds(eps)?;
    let ok = (len - 4.0 * PI).abs() <= 1e-9 && row.sigma_1 <= b.rq_f1 && row.sigma_2 <= b.sigma2_bound();
    Ok((ok, format!("eps = 0.03: length error {:.1e}, Rayleigh bounds hold {}", (len - 4.0 * PI).abs(), ok)))
}

fn flat_optimum(c: &Ctx) -> Check {
    let n_modes = (c.n / 4).clamp(1, 8);
    let cfg = OptimizerConfig { n_modes, solver_n: c.n, grad_tol: 1e-10, seed: c.seed, ..Default::default() };
    let mut c0 = vec![0.0; n_modes];
    c0[0] = 0.2;
    let res = minimize_from_coeffs(&FunctionalParams::new(1.0, 1.0)?, &cfg, &c0)?;
    let cn = res.coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let de = (res.energy - 1.0 / PI).abs();
    Ok((cn <= 1e-6 && de <= 1e-8, format!("t = 1: |v| {cn:.1e}, |E - 1/pi| {de:.1e}")))
}

fn flat_immersion(c: &Ctx) -> Check {
    let imm = build_immersion(&solve_spectrum(&BoundaryWeight::flat(), c.n, 6)?)?;
    Ok((
        imm.planar && imm.ellipsoid_residual <= 1e-10,
        format!("planar {}, residual {:.1e}", imm.planar, imm.ellipsoid_residual),
    ))
}

fn schema(_: &Ctx) -> Check {
    let mut cfg = RunConfig::default();
    cfg.grids.t = vec![5.0, 3.0];
    let rejected = matches!(cfg.validate(Command::Sweep), Err(CliError::Config(_)));
    let base = RunConfig::default();
    let mut other = RunConfig::default();
    other.params.t = 9.0;
    let stable = base.hash(Command::Sweep) == RunConfig::default().hash(Command::Sweep);
    let distinct = base.hash(Command::Sweep) != other.hash(Command::Sweep);
    Ok((
        rejected && stable && distinct,
        format!("non-monotone grid rejected {rejected}, hash stable {stable}, distinct {distinct}"),
    ))
}

/// Returns the report text and the exit code (0, 3 or 4).
pub fn run(n: usize, seed: u64) -> (String, i32) {
    let checks: [(&str, fn(&Ctx) -> Check); 13] = [
        ("flat_disk_spectrum", flat_disk),
        ("constant_weight", constant_weight),
        ("scale_invariance", scale_invariance),
        ("spectral_inequalities", inequalities),
        ("blocks_match_dense_solve", blocks_match_full),
        ("eigensolver_paths_agree", eigensolver_paths),
        ("subgradient_vs_finite_differences", subgradient_fd),
        ("ellipse_closed_form", ellipse_closed_form),
        ("test_family_length_and_bounds", test_family),
        ("flat_disk_minimizes_t1", flat_optimum),
        ("flat_disk_immersion", flat_immersion),
        ("config_schema_and_hash", schema),
        ("determinism", determinism),
    ];
    let ctx = Ctx { n, seed };
    let mut out = format!("steklov-lab {} selftest solver_n={n} seed={seed}\n", crate::VERSION);
    let (mut failed, mut resolution) = (0, false);
    for (name, f) in checks {
        let line = match f(&ctx) {
            Ok((true, d)) => format!("PASS {name}: {d}"),
            Ok((false, d)) => {
                failed += 1;
                format!("FAIL {name}: {d}")
            }
            Err(e) => {
                failed += 1;
                resolution |= matches!(e, CliError::Resolution(_));
                format!("FAIL {name}: {} error: {e}", e.kind())
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("selftest: {}/{} pass\n", checks.len() - failed, checks.len()));
    let code = match (failed, resolution) {
        (0, _) => 0,
        (_, true) => 3,
        _ => 4,
    };
    (out, code)
}

fn determinism(c: &Ctx) -> Check {
    let w = random_weight(&mut c.rng(6))?;
    let a = solve_spectrum(&w, c.n, 8)?;
    let b = solve_spectrum(&random_weight(&mut c.rng(6))?, c.n, 8)?;
    let same = a.sigmas.iter().zip(&b.sigmas).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok((same, format!("bitwise identical repeat {same}")))
}
