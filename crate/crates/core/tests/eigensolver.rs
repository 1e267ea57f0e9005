mod common;

use common::eigen_oracle::*;
use rand::Rng;
use steklov_core::linalg::{generalized_eigen, generalized_eigen_diag};

#[test]
fn dense_pencils_match_oracle() {
    let mut r = common::rng(41);
    for case in 0..50 {
        let n = 1 + case % 8;
        let a = random_spd(&mut r, n, 0.5);
        let b = random_spd(&mut r, n, 1.0);
        let want = oracle(&a, &b);
        let got = generalized_eigen(&to_mat(&a), &to_mat(&b)).unwrap();
        for j in 0..n {
            assert!(
                (got.values[j] - want.values[j]).abs() <= 1e-10 * want.values[j].abs().max(1.0),
                "case {case} j {j}: {} vs {}",
                got.values[j],
                want.values[j]
            );
            if gap(&want.values, j) > 1e-3 {
                let c = b_inner(&b, &got.vectors[j], &want.vectors[j]).abs();
                assert!((1.0 - c).abs() <= 1e-10, "case {case} j {j}: overlap {c}");
            }
        }
    }
}

#[test]
fn diagonal_stiffness_path_matches_oracle() {
    let mut r = common::rng(42);
    for case in 0..50 {
        let n = 1 + case % 8;
        let d: Vec<f64> = (0..n).map(|i| std::f64::consts::PI * i as f64 + r.gen_range(0.0..0.5)).collect();
        let a: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect();
        let b = random_spd(&mut r, n, 1.0);
        let want = oracle(&a, &b);
        let k = 1 + case % n;
        let got = generalized_eigen_diag(&d, &to_mat(&b), k).unwrap();
        assert_eq!(got.values.len(), k);
        for j in 0..k {
            assert!((got.values[j] - want.values[j]).abs() <= 1e-10 * want.values[j].abs().max(1.0));
            if gap(&want.values, j) > 1e-3 {
                let c = b_inner(&b, &got.vectors[j], &want.vectors[j]).abs();
                assert!((1.0 - c).abs() <= 1e-10, "case {case} j {j}: overlap {c}");
            }
        }
    }
}

#[test]
fn oracle_recovers_diagonal_pencil() {
    let a = vec![vec![3.0, 0.0], vec![0.0, 8.0]];
    let b = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
    let o = oracle(&a, &b);
    assert!((o.values[0] - 3.0).abs() < 1e-13 && (o.values[1] - 4.0).abs() < 1e-13);
}
