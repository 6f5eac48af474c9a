//! Small dense-matrix helpers shared by all estimators.
//!
//! Everything here operates on `nalgebra::DMatrix<f64>`; the matrices in
//! this crate are 2N x 2N with 2N <= ~32, so dense routines are always the
//! right tool.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

/// Frobenius inner product `tr(A^t B)`.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// QR factorization with the sign convention `diag(R) >= 0`.
///
/// The raw Householder QR leaves the signs of the R diagonal arbitrary;
/// flipping the offending columns of Q (and rows of R) makes the log-stretch
/// accumulation of the cocycle well defined.
pub fn qr_nonneg(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = r.nrows().min(r.ncols());
    for i in 0..k {
        if r[(i, i)] < 0.0 {
            for j in 0..r.ncols() {
                r[(i, j)] = -r[(i, j)];
            }
            for j in 0..q.nrows() {
                q[(j, i)] = -q[(j, i)];
            }
        }
    }
    (q, r)
}

/// Singular values, sorted in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// 2-norm condition number `s_1 / s_min`; `inf` for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Solve `A X = B` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| CoreError::Numerical("LU solve failed on singular matrix".into()))
}

/// `(sign, log|det|)` of a square matrix via LU.
pub fn sign_log_det(m: &DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    let lu = m.clone().lu();
    let u = lu.u();
    let mut sign: f64 = lu.p().determinant::<f64>();
    let mut log_abs = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
    }
    (sign, log_abs)
}

/// Determinant carrying the sign even when `|det|` overflows f64.
pub fn robust_det(m: &DMatrix<f64>) -> f64 {
    let (sign, log_abs) = sign_log_det(m);
    sign * log_abs.exp()
}

/// Least-squares line fit `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, slope_stderr, r_squared)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2, "line fit needs at least two points");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&u, &v)| {
            let e = v - (intercept + slope * u);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let dof = (x.len().max(3) - 2) as f64;
    let slope_se = (ss_res / dof / sxx).sqrt();
    (slope, intercept, slope_se, r2)
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0);
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // the score interval contains p in exact arithmetic; enforce it against
    // rounding at the endpoints
    (((center - half).max(0.0)).min(p), ((center + half).min(1.0)).max(p))
}

/// Median and quartiles of a sample (by linear interpolation).
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |frac: f64| -> f64 {
        let pos = frac * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        if lo == hi {
            v[lo]
        } else {
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        }
    };
    (q(0.25), q(0.5), q(0.75))
}

/// Mean and standard error of a sample of batch means.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Orthonormal column frame spanning the same space as `m` (thin QR).
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (q, _) = qr_nonneg(m);
    q.columns(0, m.ncols()).into_owned()
}

/// Euclidean basis vector of length `dim`.
pub fn basis_vector(dim: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[i] = 1.0;
    v
}
