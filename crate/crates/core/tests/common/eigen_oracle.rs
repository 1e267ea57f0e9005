//! Brute-force reference for the generalized symmetric-definite eigenproblem:
//! bisection on the inertia of A - lambda B, then inverse iteration.

use rand::Rng;
use steklov_core::linalg::Mat;

pub type Dense = Vec<Vec<f64>>;

pub fn random_spd(r: &mut impl Rng, n: usize, shift: f64) -> Dense {
    let m: Dense = (0..n).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n).map(|j| (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { shift } else { 0.0 }).collect()
        })
        .collect()
}

pub fn to_mat(a: &Dense) -> Mat {
    Mat::from_fn(a.len(), a.len(), |i, j| a[i][j])
}

fn pencil(a: &Dense, b: &Dense, lambda: f64) -> Dense {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - lambda * y).collect()).collect()
}

/// Sign changes along the leading principal minors of A - lambda B, i.e. the
/// number of generalized eigenvalues below lambda.
pub fn count_below(a: &Dense, b: &Dense, lambda: f64) -> usize {
    let mut m = pencil(a, b, lambda);
    let n = m.len();
    let mut neg = 0;
    for k in 0..n {
        let mut d = m[k][k];
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / d;
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    neg
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(mut m: Dense, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = m.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        rhs.swap(k, p);
        let d = if m[k][k] == 0.0 { 1e-300 } else { m[k][k] };
        for i in k + 1..n {
            let f = m[i][k] / d;
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    x
}

pub fn mul(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn b_inner(b: &Dense, x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(mul(b, y)).map(|(p, q)| p * q).sum()
}

pub struct Oracle {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn oracle(a: &Dense, b: &Dense) -> Oracle {
    let n = a.len();
    // B >= I for the generated pencils, so the row-sum bound of A brackets all
    let hi = 2.0 * a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(1.0, f64::max);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let (mut lo, mut up) = (-1.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if count_below(a, b, mid) > k {
                up = mid;
            } else {
                lo = mid;
            }
            if up - lo <= 1e-15 * up.abs().max(1.0) {
                break;
            }
        }
        values.push(0.5 * (lo + up));
    }
    let vectors = values
        .iter()
        .map(|&mu| {
            let shifted = pencil(a, b, mu + 1e-13 * mu.abs().max(1.0));
            let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
            for _ in 0..4 {
                x = lu_solve(shifted.clone(), mul(b, &x));
                let s = b_inner(b, &x, &x).sqrt();
                x.iter_mut().for_each(|v| *v /= s);
            }
            x
        })
        .collect();
    Oracle { values, vectors }
}

pub fn gap(values: &[f64], j: usize) -> f64 {
    let l = if j > 0 { values[j] - values[j - 1] } else { f64::INFINITY };
    let r = if j + 1 < values.len() { values[j + 1] - values[j] } else { f64::INFINITY };
    l.min(r)
}
