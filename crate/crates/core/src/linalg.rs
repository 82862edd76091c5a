//! Dense row-major helpers for the small matrices this crate needs.

use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

/// Lower Cholesky factor of the symmetric positive definite `n x n` matrix `a`.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Cholesky with one retry after adding `1e-12 * max diagonal` to the diagonal.
pub fn cholesky_with_jitter(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Some(l) = cholesky(a, n) {
        return Ok(l);
    }
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
    let jitter = 1e-12 * max_diag;
    let mut b = a.to_vec();
    for i in 0..n {
        b[i * n + i] += jitter;
    }
    cholesky(&b, n).ok_or_else(|| {
        Error::Factorization(format!(
            "{n}x{n} covariance is not positive definite after jitter {jitter:e}"
        ))
    })
}

/// A factor `L` (lower triangular) with `L L^T = a` for symmetric positive
/// semi-definite `a`; zero pivots produce zero columns.
pub fn psd_factor(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = alloc::vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -tol {
            return Err(Error::Factorization(format!(
                "matrix is not positive semi-definite (pivot {d:e} at column {j})"
            )));
        }
        if d <= tol {
            continue;
        }
        let piv = libm::sqrt(d);
        l[j * n + j] = piv;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / piv;
        }
    }
    Ok(l)
}

/// `out = a * x` for row-major `a` (`rows x cols`).
#[inline]
pub fn mat_vec(a: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..rows {
        out[i] = a[i * cols..(i + 1) * cols].iter().zip(x).map(|(m, v)| m * v).sum();
    }
}

/// `out = a^T * x` for row-major `a` (`rows x cols`).
#[inline]
pub fn mat_t_vec(a: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    out[..cols].iter_mut().for_each(|o| *o = 0.0);
    for i in 0..rows {
        let xi = x[i];
        for j in 0..cols {
            out[j] += a[i * cols + j] * xi;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
