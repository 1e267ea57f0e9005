mod common;

use std::f64::consts::PI;
use std::fs;

use steklov_core::ellipse::{conformal_map_auto, default_resolution, pullback_weight};
use steklov_core::immersion::{
    build_immersion, diagnostics, embedding_diagnostics, export_surface, half_disk_boundary, nodal_count,
    surface_point, verify_area_identity, verify_conformality, verify_critical_weight, winding_number, Immersion,
};
use steklov_core::optimizer::OptimizerConfig;
use steklov_core::steklov::solve_spectrum;
use steklov_core::trig::TrigSeries;
use steklov_core::{BoundaryWeight, Error};

fn flat() -> Immersion {
    build_immersion(&solve_spectrum(&BoundaryWeight::flat(), 32, 6).unwrap()).unwrap()
}

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("steklov-immersion-{name}-{}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn flat_disk_diagnostics() {
    let imm = flat();
    assert!(imm.planar);
    assert!((imm.ellipsoid_p - 1.0).abs() < 1e-12);
    let d = diagnostics(&imm, &BoundaryWeight::flat(), 32).unwrap();
    assert!(d.conformality_residual < 1e-12);
    assert!(d.ellipsoid_residual < 1e-12);
    assert!(d.area_mismatch < 1e-12 && (d.area - PI).abs() < 1e-12);
    assert_eq!(d.winding, 1);
    assert!(d.jacobian_min > 0.0);
    assert_eq!(d.nodal_counts, [Some(2), Some(2), None]);
    assert!(d.critical_weight_mismatch < 1e-12);
}

#[test]
fn ellipse_immersion_is_planar_and_conformal() {
    let p = 0.6;
    let n = default_resolution(p);
    let w = pullback_weight(&conformal_map_auto(p).unwrap(), n).unwrap().rotated(PI / 2.0).unwrap();
    let imm = build_immersion(&solve_spectrum(&w, n, 8).unwrap()).unwrap();
    assert!(imm.planar);
    assert!((imm.ellipsoid_p - p).abs() < 1e-6);
    assert!(imm.ellipsoid_residual < 1e-6);
    assert!(verify_conformality(&imm, 32, 128) < 1e-6);
    assert!(verify_critical_weight(&imm, &w).unwrap() < 1e-6);
    let (_, dev) = verify_area_identity(&imm);
    assert!(dev < 1e-6);
    let emb = embedding_diagnostics(&imm, 32).unwrap();
    assert_eq!(emb.winding, 1);
    assert!(emb.jacobian_min > 0.0);
}

#[test]
fn unrotated_ellipse_weight_has_the_wrong_orientation() {
    let p = 0.6;
    let n = default_resolution(p);
    let w = pullback_weight(&conformal_map_auto(p).unwrap(), n).unwrap();
    let err = build_immersion(&solve_spectrum(&w, n, 8).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Structure(_)));
}

#[test]
fn zero_map_has_zero_conformality_residual() {
    let mut imm = flat();
    imm.scalings = [0.0; 3];
    assert_eq!(verify_conformality(&imm, 8, 32), 0.0);
}

#[test]
fn single_coordinate_is_far_from_conformal() {
    let mut imm = flat();
    imm.scalings[0] = 0.0;
    assert!(verify_conformality(&imm, 16, 64) >= 0.5);
}

#[test]
fn perturbed_weight_is_not_critical() {
    let imm = flat();
    let w = BoundaryWeight::new(TrigSeries::cosine(vec![1.0, 0.0, 0.0, 0.0, 0.1])).unwrap();
    assert!(verify_critical_weight(&imm, &w).unwrap() >= 5e-2);
}

#[test]
fn vanishing_coordinates_are_degenerate() {
    let mut imm = flat();
    imm.scalings = [0.0; 3];
    assert!(matches!(verify_critical_weight(&imm, &BoundaryWeight::flat()), Err(Error::Degenerate(_))));
}

#[test]
fn reflection_preserves_diagnostics() {
    let imm = flat();
    for flip_x in [true, false] {
        let r = imm.reflected(flip_x);
        assert!(verify_conformality(&r, 16, 64) < 1e-12);
        let e = embedding_diagnostics(&r, 16).unwrap();
        assert_eq!(e.winding, 1);
        assert!(e.jacobian_min > 0.0);
        assert_eq!(e.nodal_counts, [Some(2), Some(2), None]);
    }
}

#[test]
fn winding_and_nodal_helpers() {
    let b = half_disk_boundary(400);
    assert_eq!(b.len(), 400);
    assert!(b.iter().all(|&(r, t)| r <= 1.0 + 1e-15 && (-1e-15..=PI + 1e-15).contains(&t)));
    let through_origin = vec![(1.0, 0.0), (0.0, 0.0), (-1.0, 0.0)];
    assert_eq!(winding_number(&through_origin, 1e-12), None);
    let cos3 = TrigSeries::cosine(vec![0.0, 0.0, 0.0, 1.0]);
    assert_eq!(nodal_count(&cos3, 128), 6);
    let c1 = TrigSeries::cosine(vec![0.0, 1.0]);
    assert_eq!(nodal_count(&c1, 128), 2);
}

#[test]
fn export_of_flat_disk_is_planar() {
    let dir = scratch_dir("flat");
    let stem = dir.join("disk");
    export_surface(&flat(), 8, &stem, &[]).unwrap();
    let obj = fs::read_to_string(dir.join("disk.obj")).unwrap();
    let verts: Vec<Vec<f64>> = obj
        .lines()
        .filter(|l| l.starts_with("v "))
        .map(|l| l[2..].split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(verts.len(), 1 + 8 * 32);
    assert!(verts.iter().all(|v| v[2] == 0.0));
    let faces = obj.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!(faces, 32 + 2 * 7 * 32);
    let csv = fs::read_to_string(dir.join("disk_boundary.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("theta,x0,x1,x2"));
    assert_eq!(csv.lines().count(), 1 + 32);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn export_to_missing_directory_fails() {
    let stem = std::env::temp_dir().join("steklov-no-such-dir").join("nested").join("x");
    assert!(matches!(export_surface(&flat(), 4, &stem, &[]), Err(Error::Io(_))));
}

#[test]
fn optimized_surface_stays_in_the_ellipsoid() {
    let r = common::minimize_s1(8.0, &OptimizerConfig::default());
    let imm = build_immersion(&r.spectrum).unwrap();
    assert!(!imm.planar);
    let p = imm.ellipsoid_p;
    let q = |x: [f64; 3]| p * x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    for j in 0..64 {
        let t = 2.0 * PI * j as f64 / 64.0;
        assert!((q(surface_point(&imm, 1.0, t)) - 1.0).abs() < 1e-3);
        for i in 0..8 {
            assert!(q(surface_point(&imm, i as f64 / 8.0, t)) < 1.0 + 1e-3);
        }
    }
    let dir = scratch_dir("t8");
    export_surface(&imm, 16, &dir.join("t8"), &[]).unwrap();
    let obj = fs::read_to_string(dir.join("t8.obj")).unwrap();
    let zext = obj
        .lines()
        .filter(|l| l.starts_with("v "))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(zext > 1e-2);
    fs::remove_dir_all(dir).unwrap();
}
