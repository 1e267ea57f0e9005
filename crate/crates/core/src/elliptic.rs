//! Complete elliptic integral and Jacobi elliptic functions of real argument
//! via the arithmetic-geometric mean.

use std::f64::consts::PI;

/// K(m) with parameter m = k^2 in [0, 1).
pub fn ellipk(m: f64) -> f64 {
    let (mut a, mut b) = (1.0, (1.0 - m).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// (sn, cn, dn)(u | m) by descending Landen transformation.
pub fn ellipj(u: f64, m: f64) -> (f64, f64, f64) {
    if m < 1e-300 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = vec![1.0];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > 1e-16 && a.len() < 40 {
        let an = *a.last().unwrap();
        a.push(0.5 * (an + b));
        c.push(0.5 * (an - b));
        b = (an * b).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    (sn, cn, dn)
}

/// Modulus k from the nome q via k = (theta_2(q) / theta_3(q))^2.
pub fn modulus_from_nome(q: f64) -> f64 {
    let mut t2 = 0.0;
    let mut t3 = 1.0;
    for n in 0..200 {
        let nf = n as f64;
        let term2 = q.powf((nf + 0.5) * (nf + 0.5));
        t2 += 2.0 * term2;
        if n > 0 {
            t3 += 2.0 * q.powf(nf * nf);
        }
        if term2 < 1e-18 * t2 && n > 2 {
            break;
        }
    }
    (t2 / t3).powi(2)
}
