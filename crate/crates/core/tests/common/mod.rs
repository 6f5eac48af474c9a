//! Independent oracles shared by the integration tests. These deliberately
//! avoid the library's own numerical paths: the exponential is a plain
//! Taylor sum with exact power-of-two scaling, and the transfer oracle is a
//! fixed-step RK4 integration of the first-order system.

#![allow(dead_code)]

use dirac_loc_core::rng::{cell_channel_bits, unit_f64};
use nalgebra::DMatrix;

/// Taylor-series exponential with exact 2^k scaling.
pub fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let k = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a * 2f64.powi(-k);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for order in 1..=40 {
        term = &term * &scaled / order as f64;
        sum += &term;
        if term.norm() < 1e-22 * sum.norm() {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// RK4 propagator of `u' = X u` over length `len` with `steps` substeps,
/// for a piecewise-constant generator given per substep.
pub fn rk4_transfer<F>(dim: usize, len: f64, steps: usize, generator_at: F) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let h = len / steps as f64;
    let mut u = DMatrix::<f64>::identity(dim, dim);
    for k in 0..steps {
        let t0 = k as f64 * h;
        let g1 = generator_at(t0 + 1e-12 * h.abs());
        let gm = generator_at(t0 + 0.5 * h);
        let g2 = generator_at(t0 + h - 1e-12 * h.abs());
        let k1 = &g1 * &u;
        let k2 = &gm * (&u + &k1 * (0.5 * h));
        let k3 = &gm * (&u + &k2 * (0.5 * h));
        let k4 = &g2 * (&u + &k3 * h);
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    u
}

/// Deterministic pseudo-random matrix with entries in [-1, 1).
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        2.0 * unit_f64(cell_channel_bits(seed, (i * cols + j) as i64, 11)) - 1.0
    })
}

/// Project a random matrix onto the symplectic algebra via the block
/// characterization [[A, B], [C, -A^t]] with B, C symmetric.
pub fn random_sp_element(n: usize, seed: u64, scale: f64) -> DMatrix<f64> {
    let a = random_matrix(n, n, seed);
    let b0 = random_matrix(n, n, seed.wrapping_add(1));
    let c0 = random_matrix(n, n, seed.wrapping_add(2));
    let b = (&b0 + b0.transpose()) * 0.5;
    let c = (&c0 + c0.transpose()) * 0.5;
    let mut x = DMatrix::zeros(2 * n, 2 * n);
    x.view_mut((0, 0), (n, n)).copy_from(&a);
    x.view_mut((0, n), (n, n)).copy_from(&b);
    x.view_mut((n, 0), (n, n)).copy_from(&c);
    x.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    x * scale
}
