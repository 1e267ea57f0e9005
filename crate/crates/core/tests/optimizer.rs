mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use steklov_core::immersion::{build_immersion, diagnostics, mass_residuals};
use steklov_core::optimizer::{
    coeffs_from_weight, criticality_residuals, minimize, minimize_from_coeffs, sweep_t, weight_from_coeffs,
    OptimizationResult, OptimizerConfig, Status,
};
use steklov_core::steklov::{solve_spectrum, Block};
use steklov_core::trig::TrigSeries;
use steklov_core::{BoundaryWeight, Error, FunctionalParams};

fn t8() -> &'static OptimizationResult {
    static RUN: OnceLock<OptimizationResult> = OnceLock::new();
    RUN.get_or_init(|| common::minimize_s1(8.0, &OptimizerConfig::default()))
}

#[test]
fn t8_converges_to_a_nonplanar_critical_weight() {
    let r = t8();
    assert_eq!(r.status, Status::Converged, "{:?}", r.message);
    assert!(r.subgrad_norm <= 1e-4);
    assert!(!r.planarity_flag);
    assert!(r.sigma_bar(1) < r.sigma_bar(2));
    let (m0, m12) = r.mass_residuals.unwrap();
    assert!(m0 <= 1e-3 && m12 <= 1e-3, "{m0} {m12}");
    let params = FunctionalParams::new(1.0, 8.0).unwrap();
    let again = criticality_residuals(r, &params).unwrap();
    assert_eq!(again, (m0, m12));
    assert!(r.energy < 9.0 / (2.0 * PI));
    assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!((r.p - r.sigma_bar(1) / r.sigma_bar(2)).abs() < 1e-15);
}

#[test]
#[ignore = "known failure: E is about 0.991 against 2 sqrt(8) / (2 pi) = 0.900"]
fn t8_energy_is_below_the_elongated_ellipse_value() {
    let r = t8();
    assert!(r.energy < 2.0 * 8f64.sqrt() / (2.0 * PI), "E = {}", r.energy);
}

#[test]
fn t8_surface_diagnostics() {
    let r = t8();
    let imm = build_immersion(&r.spectrum).unwrap();
    let d = diagnostics(&imm, &r.weight, 64).unwrap();
    assert!(d.ellipsoid_residual <= 1e-3);
    assert!(d.conformality_residual <= 1e-3);
    assert!(d.area_mismatch <= 1e-3);
    assert_eq!(d.winding, 1);
    assert!(d.jacobian_min > 0.0);
    assert_eq!(d.nodal_counts, [Some(2), Some(2), Some(3)]);
    assert!(d.critical_weight_mismatch <= 1e-2);
    assert!(d.min_boundary_speed > 0.0);
}

#[test]
fn t8_orientation_puts_sigma_1_in_the_sin_odd_block() {
    let r = t8();
    assert_eq!(r.spectrum.blocks[1], Some(Block::SinOdd));
}

#[test]
fn restart_from_the_optimum_stays_there() {
    let r = t8();
    let params = FunctionalParams::new(1.0, 8.0).unwrap();
    let again = minimize_from_coeffs(&params, &OptimizerConfig::default(), &r.coeffs).unwrap();
    assert!(again.converged());
    assert!(again.iterations <= 2, "{} iterations", again.iterations);
    assert!((again.energy - r.energy).abs() < 1e-8);
}

#[test]
fn runs_are_deterministic() {
    let cfg = OptimizerConfig { max_iters: 5, ..Default::default() };
    let a = common::minimize_s1(3.0, &cfg);
    let b = common::minimize_s1(3.0, &cfg);
    assert_eq!(a.coeffs, b.coeffs);
    assert_eq!(a.objective_trace, b.objective_trace);
}

#[test]
fn t1_returns_the_flat_disk() {
    let cfg = OptimizerConfig { grad_tol: 1e-10, ..Default::default() };
    let r = common::minimize_s1(1.0, &cfg);
    let cnorm = r.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!(cnorm <= 1e-6, "|c| = {cnorm}");
    assert!((r.energy - 1.0 / PI).abs() <= 1e-8);
}

#[test]
fn sweep_is_monotone() {
    let rows =
        sweep_t(1.0, &[5.0, 8.0, 12.0, 20.0, 40.0], &OptimizerConfig::default(), &common::initial_weight()).unwrap();
    for r in &rows {
        assert_eq!(r.status, Status::Converged, "t = {}", r.t);
        assert!(!r.flagged);
    }
    for w in rows.windows(2) {
        assert!(w[1].p < w[0].p);
        assert!(w[1].l > w[0].l);
        assert!(4.0 * PI - w[1].l < 4.0 * PI - w[0].l);
    }
    let last = rows.last().unwrap();
    assert!((0.5..=2.0).contains(&last.sigma1_log_scaled), "{}", last.sigma1_log_scaled);
}

#[test]
fn sweep_rejects_unsorted_grid() {
    let err = sweep_t(1.0, &[5.0, 3.0], &OptimizerConfig::default(), &common::initial_weight()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn config_validation() {
    let bad = OptimizerConfig { n_modes: 40, solver_n: 128, ..Default::default() };
    assert!(matches!(bad.validate(), Err(Error::Domain(_))));
    let bad = OptimizerConfig { armijo_factor: 1.5, ..Default::default() };
    assert!(bad.validate().is_err());
    assert!(OptimizerConfig::default().validate().is_ok());
    let params = FunctionalParams::new(1.0, 2.0).unwrap();
    let short = vec![0.0; 3];
    assert!(minimize_from_coeffs(&params, &OptimizerConfig::default(), &short).is_err());
}

#[test]
fn asymmetric_start_is_rejected() {
    let w = BoundaryWeight::new(TrigSeries::new(vec![1.0, 0.2], vec![])).unwrap();
    let params = FunctionalParams::new(1.0, 2.0).unwrap();
    assert!(matches!(minimize(&params, &OptimizerConfig::default(), &w), Err(Error::Symmetry(_))));
}

#[test]
fn coefficients_round_trip_through_weights() {
    let c = vec![0.2, -0.05, 0.01, 0.0];
    let w = weight_from_coeffs(&c, 64).unwrap();
    let back = coeffs_from_weight(&w, 4).unwrap();
    for (a, b) in c.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn noncritical_weight_violates_mass_conditions() {
    // c_1 < 0 puts sigma_1 in the sin-odd block and sigma_2 in the cos-odd one
    let w = weight_from_coeffs(&[-0.3, 0.1], 128).unwrap();
    let s = solve_spectrum(&w, 128, 8).unwrap();
    let params = FunctionalParams::new(1.0, 8.0).unwrap();
    match build_immersion(&s) {
        Ok(imm) => {
            let (m0, m12) = mass_residuals(&imm, &params);
            assert!(m0.max(m12) >= 1e-2, "{m0} {m12}");
        }
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let cfg = OptimizerConfig { max_iters: 3, ..Default::default() };
    let r = common::minimize_s1(8.0, &cfg);
    let mut buf = Vec::new();
    r.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), r.records.len() + 1);
    assert!(text.starts_with("iter,energy,"));
}
