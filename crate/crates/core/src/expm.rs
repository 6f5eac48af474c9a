//! Dense matrix exponential by scaling and squaring.
//!
//! A fixed [13/13] Pade approximant is used at every call, with the scaling
//! power chosen from the 1-norm. Using a single fixed order (instead of the
//! adaptive order ladder) keeps the result bit-identical for a given input
//! across runs and platforms, which long cocycle products depend on.

use nalgebra::DMatrix;

/// Pade [13/13] numerator coefficients for the exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled [13/13] approximant is accurate.
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// `exp(A)` for a square real matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);

    let ident = DMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * PADE13[13] + &a4 * PADE13[11] + &a2 * PADE13[9])
        + &a6 * PADE13[7]
        + &a4 * PADE13[5]
        + &a2 * PADE13[3]
        + &ident * PADE13[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * PADE13[12] + &a4 * PADE13[10] + &a2 * PADE13[8])
        + &a6 * PADE13[6]
        + &a4 * PADE13[4]
        + &a2 * PADE13[2]
        + &ident * PADE13[0];

    let vmu = &v - &u;
    let vpu = &v + &u;
    let mut result = vmu
        .lu()
        .solve(&vpu)
        .expect("Pade denominator is singular; input matrix is not finite");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_of_zero_is_identity() {
        let z = DMatrix::zeros(4, 4);
        assert_relative_eq!(expm(&z), DMatrix::identity(4, 4), epsilon = 1e-15);
    }

    #[test]
    fn rotation_generator_gives_cos_sin() {
        // exp(t*[[0,1],[-1,0]]) = [[cos t, sin t],[-sin t, cos t]]
        let t = 0.7;
        let g = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&g);
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-14);
        assert_relative_eq!(e[(0, 1)], t.sin(), epsilon = 1e-14);
        assert_relative_eq!(e[(1, 0)], -t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn nilpotent_exponential_is_exact() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let e = expm(&g);
        assert_relative_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 40.0, -40.0, 0.0]);
        let e = expm(&g);
        assert_relative_eq!(e[(0, 0)], 40.0_f64.cos(), epsilon = 1e-10);
    }

    #[test]
    fn determinism_same_input_same_bits() {
        let g = DMatrix::from_row_slice(3, 3, &[0.1, 2.0, -0.3, 0.0, -1.0, 4.0, 0.5, 0.0, 0.9]);
        let a = expm(&g);
        let b = expm(&g);
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
