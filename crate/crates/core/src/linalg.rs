//! Dense symmetric linear algebra: Cholesky, Householder tridiagonalization,
//! implicit QL and the Cholesky-reduced generalized eigenproblem.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lower-triangular `L` with `B = L L^T`.
pub fn cholesky(b: &Mat) -> Result<Mat> {
    let n = b.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let lj: Vec<f64> = l.row(j)[..j].to_vec();
        let d = b[(j, j)] - dot(&lj, &lj);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Resolution(format!(
                "mass matrix not positive definite at pivot {j} (d = {d:e}); increase N"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = b[(i, j)] - dot(&l.row(i)[..j], &lj);
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &Mat) -> Mat {
    let n = l.rows;
    let mut inv = Mat::zeros(n, n);
    let mut x = vec![0.0; n];
    // column j of the inverse by forward substitution, rows of l contiguous
    for j in 0..n {
        x[j] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let s = dot(&l.row(i)[j..i], &x[j..i]);
            x[i] = -s / l[(i, i)];
        }
        for i in j..n {
            inv[(i, j)] = x[i];
        }
    }
    inv
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// `vectors[j]` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Householder reduction without forming Q. Returns (h, e, V): column m of V
/// holds the reflector u_m in rows 0..m with I - u u^T / h_m, the diagonal of T
/// sits on the diagonal of V.
fn tred2_reduce(a: &Mat) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.rows;
    // column-major V(k, j) = v[j * n + k]; a is symmetric so the layouts agree
    let mut v = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let ix = |k: usize, j: usize| j * n + k;
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
                v[ix(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[ix(j, i)] = f;
                g = e[j] + v[ix(j, j)] * f;
                let col = &v[j * n..j * n + n];
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + n];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = col[i - 1];
                col[i] = 0.0;
            }
        }
        d[i] = h;
    }
    (d, e, v)
}

/// Householder reduction to tridiagonal form. Returns (d, e, Q) with Q stored
/// column-major; `e[0]` is unused and `e[i]` couples rows i-1 and i.
fn tred2(a: &Mat) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let (mut d, mut e, mut v) = tred2_reduce(a);
    let ix = |k: usize, j: usize| j * n + k;
    for i in 0..n.saturating_sub(1) {
        v[ix(n - 1, i)] = v[ix(i, i)];
        v[ix(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[ix(k, i + 1)] / h;
            }
            for j in 0..=i {
                let (left, right) = v.split_at_mut((i + 1) * n);
                let ci = &right[..n];
                let cj = &mut left[j * n..j * n + n];
                let mut g = 0.0;
                for k in 0..=i {
                    g += ci[k] * cj[k];
                }
                for k in 0..=i {
                    cj[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[ix(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
        v[ix(n - 1, j)] = 0.0;
    }
    if n > 0 {
        v[ix(n - 1, n - 1)] = 1.0;
        e[0] = 0.0;
    }
    (d, e, v)
}

/// Implicit QL on the tridiagonal (d, e) from `tred2`. When `v` is given the
/// rotations are accumulated into it (column-major).
fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>) {
    let n = d.len();
    if n == 0 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vv) = v.as_deref_mut() {
                        let (left, right) = vv.split_at_mut((i + 1) * n);
                        let ci = &mut left[i * n..i * n + n];
                        let ci1 = &mut right[..n];
                        for k in 0..n {
                            let hk = ci1[k];
                            ci1[k] = s * ci[k] + c * hk;
                            ci[k] = c * ci[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eigen(a: &Mat) -> SymEigen {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let (mut d, mut e, mut v) = tred2(a);
    tql2(&mut d, &mut e, Some(&mut v));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    SymEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        vectors: order.iter().map(|&i| v[i * n..i * n + n].to_vec()).collect(),
    }
}

/// Eigenvalues only.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let (mut d, mut e, _) = tred2(a);
    tql2(&mut d, &mut e, None);
    d.sort_by(|a, b| a.total_cmp(b));
    d
}

/// The `k` lowest eigenpairs: QL eigenvalues of the tridiagonal form, inverse
/// iteration on the tridiagonal, back-transformation by the Householder basis.
pub fn sym_eigen_lowest(a: &Mat, k: usize) -> SymEigen {
    let n = a.rows;
    let k = k.min(n);
    if n <= 96 || 4 * k >= n {
        let mut full = sym_eigen(a);
        full.values.truncate(k);
        full.vectors.truncate(k);
        return full;
    }
    let (h, e, v) = tred2_reduce(a);
    let d: Vec<f64> = (0..n).map(|i| v[i * n + i]).collect();
    // tridiagonal: diag d, off-diagonal e[1..]
    let sub: Vec<f64> = e[1..].to_vec();
    let mut dv = d.clone();
    let mut ev = e.clone();
    tql2(&mut dv, &mut ev, None);
    dv.sort_by(|a, b| a.total_cmp(b));
    let tnorm = d
        .iter()
        .enumerate()
        .map(|(i, di)| di.abs() + if i > 0 { sub[i - 1].abs() } else { 0.0 } + sub.get(i).map_or(0.0, |s| s.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut tvecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (idx, &lam) in dv.iter().take(k).enumerate() {
        let shift = lam + 4.0 * f64::EPSILON * tnorm;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * (((i * 7919 + idx * 104729) % 17) as f64 / 17.0)).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|xi| *xi /= nx);
        for _ in 0..4 {
            let mut y = tridiag_shifted_solve(&d, &sub, shift, &x, tnorm);
            for (j, prev) in tvecs.iter().enumerate() {
                if (dv[j] - lam).abs() <= 1e-3 * tnorm {
                    let c = dot(prev, &y);
                    y.iter_mut().zip(prev).for_each(|(yi, pi)| *yi -= c * pi);
                }
            }
            let ny = norm(&y);
            x = y.into_iter().map(|yi| yi / ny).collect();
        }
        tvecs.push(x);
    }
    // x = P_{n-1} ... P_1 y
    let vectors = tvecs
        .into_iter()
        .map(|mut x| {
            for m in 1..n {
                if h[m] == 0.0 {
                    continue;
                }
                let u = &v[m * n..m * n + m];
                let g = dot(u, &x[..m]) / h[m];
                x[..m].iter_mut().zip(u).for_each(|(xi, ui)| *xi -= g * ui);
            }
            x
        })
        .collect();
    SymEigen { values: dv[..k].to_vec(), vectors }
}

/// Solve (T - mu I) x = b for the symmetric tridiagonal T = tri(sub, d, sub)
/// by Gaussian elimination with partial pivoting.
fn tridiag_shifted_solve(d: &[f64], sub: &[f64], mu: f64, b: &[f64], tnorm: f64) -> Vec<f64> {
    let n = d.len();
    let tiny = f64::EPSILON * tnorm;
    let mut a: Vec<f64> = d.iter().map(|di| di - mu).collect();
    let lo = sub.to_vec();
    let mut up = sub.to_vec();
    let mut up2 = vec![0.0; n];
    let mut r = b.to_vec();
    for i in 0..n - 1 {
        if a[i].abs() >= lo[i].abs() {
            if a[i] == 0.0 {
                a[i] = tiny;
            }
            let f = lo[i] / a[i];
            a[i + 1] -= f * up[i];
            r[i + 1] -= f * r[i];
        } else {
            let f = a[i] / lo[i];
            a[i] = lo[i];
            let old = a[i + 1];
            a[i + 1] = up[i] - f * old;
            if i + 1 < n - 1 {
                up2[i] = up[i + 1];
                up[i + 1] = -f * up2[i];
            }
            up[i] = old;
            r.swap(i, i + 1);
            r[i + 1] -= f * r[i];
        }
    }
    if a[n - 1] == 0.0 {
        a[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = r[i];
        if i + 1 < n {
            s -= up[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= up2[i] * x[i + 2];
        }
        x[i] = s / a[i];
    }
    x
}

/// Generalized symmetric-definite problem `A u = lambda B u`, all pairs,
/// eigenvectors B-orthonormal.
pub fn generalized_eigen(a: &Mat, b: &Mat) -> Result<SymEigen> {
    let l = cholesky(b)?;
    let li = lower_inverse(&l);
    let c = li.matmul(a).matmul(&li.transpose());
    let c = symmetrize(c);
    let se = sym_eigen(&c);
    Ok(back_transform(&li, se))
}

/// Same problem with diagonal `A = diag(a)`, `a >= 0`; returns the `k` lowest
/// pairs.
pub fn generalized_eigen_diag(a: &[f64], b: &Mat, k: usize) -> Result<SymEigen> {
    let n = a.len();
    let l = cholesky(b)?;
    let li = lower_inverse(&l);
    // C = M M^T with M = L^{-1} diag(sqrt a), M lower triangular
    let mut m = li.clone();
    for i in 0..n {
        for j in 0..=i {
            m[(i, j)] *= a[j].sqrt();
        }
    }
    let mut c = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&m.row(i)[..=j], &m.row(j)[..=j]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let se = sym_eigen_lowest(&c, k);
    Ok(back_transform(&li, se))
}

fn symmetrize(mut c: Mat) -> Mat {
    for i in 0..c.rows {
        for j in 0..i {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    c
}

/// u = L^{-T} y
fn back_transform(li: &Mat, se: SymEigen) -> SymEigen {
    let n = li.rows;
    let vectors = se
        .vectors
        .iter()
        .map(|y| {
            let mut u = vec![0.0; n];
            for (i, &yi) in y.iter().enumerate() {
                let row = &li.row(i)[..=i];
                u[..=i].iter_mut().zip(row).for_each(|(uk, lik)| *uk += lik * yi);
            }
            u
        })
        .collect();
    SymEigen { values: se.values, vectors }
}

/// Solve the symmetric positive definite system `a x = b` (Cholesky).
pub fn spd_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - dot(&l.row(i)[..i], &y[..i])) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize, seed: u64) -> Mat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        for n in [1, 2, 5, 17, 40] {
            let a = test_matrix(n, n as u64 + 3);
            let se = sym_eigen(&a);
            for (lam, v) in se.values.iter().zip(&se.vectors) {
                let av = a.mul_vec(v);
                let r: f64 = av.iter().zip(v).map(|(x, y)| (x - lam * y).abs()).fold(0.0, f64::max);
                assert!(r < 1e-12, "n={n} residual {r}");
                assert!((norm(v) - 1.0).abs() < 1e-12);
            }
            assert!(se.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lowest_path_matches_full() {
        let n = 150;
        let a = test_matrix(n, 99);
        let full = sym_eigen(&a);
        let low = sym_eigen_lowest(&a, 6);
        for j in 0..6 {
            assert!((full.values[j] - low.values[j]).abs() < 1e-12);
            let c = dot(&full.vectors[j], &low.vectors[j]).abs();
            assert!((c - 1.0).abs() < 1e-9, "vector {j}: {c}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let b = Mat::from_diag(&[1.0, -1.0]);
        assert!(matches!(cholesky(&b), Err(Error::Resolution(_))));
    }

    #[test]
    fn spd_solve_roundtrip() {
        let b = Mat::from_fn(4, 4, |i, j| if i == j { 4.0 } else { 1.0 / (1.0 + (i + j) as f64) });
        let x = [1.0, -2.0, 0.5, 3.0];
        let rhs = b.mul_vec(&x);
        let y = spd_solve(&b, &rhs).unwrap();
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-13);
        }
    }
}
