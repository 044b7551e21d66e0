//! Small dense helpers used by the frame solves and transport systems.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(x: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Solve a square system by Gaussian elimination with partial pivoting.
/// `a` is row-major `n x n`, consumed; `b` length `n`.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-13 {
            return Err(CoreError::SingularFrame);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f != 0.0 {
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Least-squares solution of `A x = b` with `A` of size `m x n`, `m >= n`,
/// via the normal equations (the systems here are tiny and well scaled).
pub fn lstsq(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let n = a[0].len();
    let mut ata = alloc::vec![alloc::vec![0.0; n]; n];
    let mut atb = alloc::vec![0.0; n];
    for i in 0..m {
        for p in 0..n {
            atb[p] += a[i][p] * b[i];
            for q in 0..n {
                ata[p][q] += a[i][p] * a[i][q];
            }
        }
    }
    solve_dense(ata, atb)
}

/// 3x3 matrix type used by the transport resolvents, row-major.
pub type Mat3 = [[f64; 3]; 3];

pub const MAT3_ID: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

pub fn mat3_inv(a: &Mat3) -> Result<Mat3> {
    let d = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if d.abs() < 1e-300 {
        return Err(CoreError::SingularFrame);
    }
    let inv_d = 1.0 / d;
    let mut out = [[0.0; 3]; 3];
    out[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_d;
    out[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_d;
    out[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_d;
    out[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_d;
    out[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_d;
    out[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_d;
    out[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_d;
    out[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_d;
    out[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_d;
    Ok(out)
}

/// Operator (spectral) norm of a 3x3 matrix via a few power iterations on
/// `A^T A`; plenty for the diagnostic bounds it feeds.
pub fn mat3_op_norm(a: &Mat3) -> f64 {
    let mut v = [1.0f64, 0.7, -0.4];
    let mut lam = 0.0;
    for _ in 0..40 {
        // w = A^T (A v)
        let av = mat3_vec(a, &v);
        let mut w = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                w[j] += a[i][j] * av[i];
            }
        }
        lam = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt().sqrt();
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        for j in 0..3 {
            v[j] = w[j] / n;
        }
    }
    // after convergence, |A v| approximates the norm
    let av = mat3_vec(a, &v);
    let n = (av[0] * av[0] + av[1] * av[1] + av[2] * av[2]).sqrt();
    n.max(lam)
}
