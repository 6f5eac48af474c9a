//! Structural matrices and membership tests for the matrix groups behind the
//! transfer-matrix dynamics: the real/complex symplectic groups and the
//! orthosymplectic group (matrices preserving both the symplectic form J and
//! the signature form S), together with the KRU normal form used to read off
//! paired singular values.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::error::{CoreError, Result};
use crate::liealgebra::{AlgebraClass, LieBasis};

/// Default membership tolerance: `1e-9 * max(1, ||M||_F)`.
pub fn default_tol(m: &DMatrix<f64>) -> f64 {
    1e-9 * m.norm().max(1.0)
}

/// Group membership summary attached to transfer matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupTag {
    GeneralLinear,
    Symplectic,
    OrthoSymplectic,
    SpecialOrthogonal,
    ComplexSymplectic,
}

/// The structural matrices of the model on `n` lines: the symplectic form J,
/// the signature form S = diag(K, K), the duality rotation P, the coupling
/// matrix Delta and the Pauli matrices.
#[derive(Debug, Clone)]
pub struct StructuralSet {
    pub n: usize,
    pub j: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub pauli: [Matrix2<Complex<f64>>; 4],
}

impl StructuralSet {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one line");
        StructuralSet {
            n,
            j: symplectic_form(n),
            s: signature_form(n),
            k: alternating_diag(n),
            p: duality_rotation(n),
            delta: coupling_delta(n),
            pauli: pauli_matrices(),
        }
    }
}

/// J = [[0, -I_N], [I_N, 0]].
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// K = diag((-1)^(i+1)), i starting at 1.
pub fn alternating_diag(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 })
}

/// S = diag(K, K).
pub fn signature_form(n: usize) -> DMatrix<f64> {
    let k = alternating_diag(n);
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&k);
    s.view_mut((n, n), (n, n)).copy_from(&k);
    s
}

/// P = (1/sqrt2) [[I, I], [I, -I]]; the unitary implementing model duality.
pub fn duality_rotation(n: usize) -> DMatrix<f64> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        p[(i, i)] = c;
        p[(i, n + i)] = c;
        p[(n + i, i)] = c;
        p[(n + i, n + i)] = -c;
    }
    p
}

/// Tridiagonal coupling: zero diagonal, ones on the sub/super-diagonal.
pub fn coupling_delta(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 })
}

pub fn pauli_matrices() -> [Matrix2<Complex<f64>>; 4] {
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let i = Complex::new(0.0, 1.0);
    [
        Matrix2::new(one, zero, zero, one),
        Matrix2::new(zero, one, one, zero),
        Matrix2::new(zero, -i, i, zero),
        Matrix2::new(one, zero, zero, -one),
    ]
}

fn require_even_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() % 2 != 0 {
        return Err(CoreError::Dimension(format!(
            "expected an even dimension, got {}",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

/// Does `M^t J M = J` hold within `tol` (Frobenius norm of the residual)?
pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = require_even_square(m)?;
    let j = symplectic_form(n);
    let res = m.transpose() * &j * m - &j;
    Ok(res.norm() <= tol)
}

/// Complex variant with the conjugate transpose: `M^* J M = J`.
pub fn is_symplectic_complex(m: &DMatrix<Complex<f64>>, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
        return Err(CoreError::Dimension(format!(
            "expected an even square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows() / 2;
    let j = symplectic_form(n).map(|x| Complex::new(x, 0.0));
    let res = m.adjoint() * &j * m - &j;
    Ok(res.norm() <= tol)
}

/// Does `M` preserve both J and S within `tol`?
pub fn is_spo(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = require_even_square(m)?;
    if !is_symplectic(m, tol)? {
        return Ok(false);
    }
    let s = signature_form(n);
    let res = m.transpose() * &s * m - &s;
    Ok(res.norm() <= tol)
}

/// Group inverse of a symplectic matrix: `M^{-1} = -J M^t J`.
pub fn symplectic_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let j = symplectic_form(n);
    -(&j * m.transpose() * &j)
}

/// `M^t M = I` within `tol`.
pub fn is_orthogonal(m: &DMatrix<f64>, tol: f64) -> bool {
    let id = DMatrix::identity(m.nrows(), m.ncols());
    (m.transpose() * m - id).norm() <= tol
}

/// Most specific tag for a real matrix at the default tolerance.
pub fn classify_membership(m: &DMatrix<f64>) -> GroupTag {
    let tol = default_tol(m);
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
        return GroupTag::GeneralLinear;
    }
    let symplectic = is_symplectic(m, tol).unwrap_or(false);
    if !symplectic {
        return GroupTag::GeneralLinear;
    }
    if is_spo(m, tol).unwrap_or(false) {
        GroupTag::OrthoSymplectic
    } else if is_orthogonal(m, tol) {
        GroupTag::SpecialOrthogonal
    } else {
        GroupTag::Symplectic
    }
}

/// Signed transpose: `(^s M)_{ij} = (-1)^(i-j+1) M_{ji}` (1-based indices).
pub fn s_transpose(m: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols(), "signed transpose needs a square matrix");
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let sign = if (i as i64 - j as i64 + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * m[(j, i)]
    })
}

fn unit_at(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i - 1, j - 1)] = 1.0;
    e
}

fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Block-diagonal basis element of the orthosymplectic algebra (1-based
/// indices). Identically zero when `i == j`.
pub fn spo_v(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let sgn = parity_sign(i as i64 - j as i64 + 1);
    let a = unit_at(n, i, j) + unit_at(n, j, i) * sgn;
    let d = unit_at(n, i, j) * (-sgn) - unit_at(n, j, i);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a);
    m.view_mut((n, n), (n, n)).copy_from(&d);
    m
}

/// Off-diagonal basis element of the orthosymplectic algebra (1-based
/// indices).
pub fn spo_w(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let b = unit_at(n, i, j) + unit_at(n, j, i);
    let c = &b * parity_sign(i as i64 - j as i64 + 1);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&b);
    m.view_mut((n, 0), (n, n)).copy_from(&c);
    m
}

/// Orthonormal basis of the orthosymplectic algebra; dimension is exactly
/// N^2 (the diagonal V elements vanish identically and are excluded).
pub fn spo_basis(n: usize) -> LieBasis {
    let mut elements = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let v = spo_v(n, i, j);
            let norm = v.norm();
            elements.push(v / norm);
        }
    }
    for i in 1..=n {
        for j in i..=n {
            let w = spo_w(n, i, j);
            let norm = w.norm();
            elements.push(w / norm);
        }
    }
    debug_assert_eq!(elements.len(), n * n);
    LieBasis {
        dim: elements.len(),
        elements,
        classification: AlgebraClass::OrthoSymplectic,
        tol: 1e-12,
        closed: true,
    }
}

/// Commutator `AB - BA`.
pub fn lie_bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(CoreError::Dimension(format!(
            "bracket needs equal square shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a * b - b * a)
}

/// Frobenius residual of the closed-form bracket identities of the spo basis
/// (both the [V, W] and the [W, W] identity), maximized over the two.
pub fn bracket_identity_check(n: usize, i: usize, j: usize, k: usize, r: usize) -> f64 {
    assert!(
        (1..=n).contains(&i) && (1..=n).contains(&j) && (1..=n).contains(&k) && (1..=n).contains(&r),
        "indices must lie in 1..=n"
    );
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    let vw = lie_bracket(&spo_v(n, i, j), &spo_w(n, k, r)).unwrap();
    let vw_rhs = parity_sign(i as i64 - j as i64 + 1)
        * (spo_w(n, j, r) * delta(i, k) + spo_w(n, j, k) * delta(i, r))
        + spo_w(n, i, r) * delta(j, k)
        + spo_w(n, i, k) * delta(j, r);

    let ww = lie_bracket(&spo_w(n, i, j), &spo_w(n, k, r)).unwrap();
    let ww_rhs = parity_sign(k as i64 - r as i64 + 1)
        * (spo_v(n, i, r) * delta(j, k)
            + spo_v(n, i, k) * delta(j, r)
            + spo_v(n, j, r) * delta(i, k)
            + spo_v(n, j, k) * delta(i, r));

    let res_vw = (vw - vw_rhs).norm();
    let res_ww = (ww - ww_rhs).norm();
    res_vw.max(res_ww)
}

/// KRU normal form of an orthosymplectic matrix: `M = K R U` with K, U
/// orthogonal members of the group and R block-diagonal made of
/// `[[cosh t, sinh t], [sinh t, cosh t]]` blocks (inverse blocks in the lower
/// half, fixed 1x1 identity blocks in the middle when N is odd).
#[derive(Debug, Clone)]
pub struct KruDecomposition {
    pub k: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Stretch parameters, non-increasing; the singular values of M are
    /// exp(+-t), each with multiplicity two.
    pub t: Vec<f64>,
}

/// Stretch parameters equal within this spacing are grouped into one
/// eigenspace before the quadruple extraction.
const T_GROUP_TOL: f64 = 1e-9;

pub fn kru_decompose(m: &DMatrix<f64>) -> Result<KruDecomposition> {
    let n = require_even_square(m)?;
    let dim = 2 * n;
    if !is_spo(m, default_tol(m))? {
        return Err(CoreError::Membership(
            "KRU input does not satisfy the J and S relations".into(),
        ));
    }
    let j = symplectic_form(n);
    let s = signature_form(n);
    let js = &j * &s;

    // M^t M is symmetric positive definite and itself orthosymplectic; its
    // eigenvalues come in (lambda, 1/lambda) pairs and JS maps each
    // eigenspace into itself.
    let mut a = m.transpose() * m;
    let at = a.transpose();
    a = (&a + at) * 0.5;
    let eig = a.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].partial_cmp(&eig.eigenvalues[p]).unwrap());

    // Cluster by t = ln(lambda)/2.
    let mut clusters: Vec<(f64, Vec<DVector<f64>>)> = Vec::new();
    for &idx in &order {
        let lam = eig.eigenvalues[idx];
        if lam <= 0.0 {
            return Err(CoreError::Numerical("nonpositive eigenvalue of M^t M".into()));
        }
        let t = 0.5 * lam.ln();
        let vec = eig.eigenvectors.column(idx).into_owned();
        match clusters.last_mut() {
            Some((t0, vs)) if (*t0 - t).abs() <= T_GROUP_TOL => vs.push(vec),
            _ => clusters.push((t, vec![vec])),
        }
    }

    // Quadruples (t, v, Sv, Jv, JSv) with v in the eigenspace of exp(2t).
    let mut quads: Vec<(f64, DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> = Vec::new();
    let mut leftover: Option<(DVector<f64>, DVector<f64>)> = None;

    for (t, vecs) in &clusters {
        if *t < -T_GROUP_TOL {
            continue; // mirror of an already-processed cluster
        }
        if *t > T_GROUP_TOL {
            if vecs.len() % 2 != 0 {
                return Err(CoreError::Numerical(format!(
                    "eigenspace at t={t:.3e} has odd dimension {}",
                    vecs.len()
                )));
            }
            let mut working = vecs.clone();
            while let Some(v) = working.first().cloned() {
                let v = &v / v.norm();
                let u = &js * &v;
                quads.push((*t, v.clone(), &s * &v, &j * &v, u.clone()));
                working = deflate(&working, &[v, u])?;
            }
        } else {
            // Unit eigenspace: split along the S eigenvectors and pair the
            // two signs.
            let m1 = vecs.len();
            let mut shat = DMatrix::zeros(m1, m1);
            for (p, vp) in vecs.iter().enumerate() {
                let svp = &s * vp;
                for (q, vq) in vecs.iter().enumerate() {
                    shat[(p, q)] = svp.dot(vq);
                }
            }
            let shat = (&shat + shat.transpose()) * 0.5;
            let se = shat.symmetric_eigen();
            let mut plus: Vec<DVector<f64>> = Vec::new();
            let mut minus: Vec<DVector<f64>> = Vec::new();
            for c in 0..m1 {
                let ev = se.eigenvalues[c];
                if (ev.abs() - 1.0).abs() > 1e-6 {
                    return Err(CoreError::Numerical(format!(
                        "S restricted to the unit eigenspace has eigenvalue {ev:.6}"
                    )));
                }
                let mut lifted = DVector::zeros(dim);
                for (p, vp) in vecs.iter().enumerate() {
                    lifted += vp * se.eigenvectors[(p, c)];
                }
                let lifted = &lifted / lifted.norm();
                if ev > 0.0 {
                    plus.push(lifted);
                } else {
                    minus.push(lifted);
                }
            }
            while !minus.is_empty() {
                let w1 = plus.first().cloned().ok_or_else(|| {
                    CoreError::Numerical("unit eigenspace S split is unbalanced".into())
                })?;
                let w2 = minus[0].clone();
                let v = (&w1 + &w2) * std::f64::consts::FRAC_1_SQRT_2;
                quads.push((0.0, v.clone(), &s * &v, &j * &v, &js * &v));
                plus = deflate(&plus, &[w1.clone(), &j * &w1])?;
                minus = deflate(&minus, &[w2.clone(), &j * &w2])?;
            }
            if !plus.is_empty() {
                if plus.len() != 2 || n % 2 == 0 || leftover.is_some() {
                    return Err(CoreError::Numerical(
                        "unexpected residual block in the unit eigenspace".into(),
                    ));
                }
                let v = plus[0].clone();
                leftover = Some((v.clone(), &j * &v));
            }
        }
    }

    quads.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let expected = 4 * quads.len() + if leftover.is_some() { 2 } else { 0 };
    if expected != dim {
        return Err(CoreError::Numerical(format!(
            "quadruple extraction covered {expected} of {dim} dimensions"
        )));
    }

    // Assemble U from the pairing of each quadruple with a 2x2 target block.
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::zeros(dim, dim);
    let mut add = |row_a: usize, row_b: usize, sign: f64, src: &DVector<f64>| {
        for c in 0..dim {
            u[(row_a, c)] += inv_sqrt2 * src[c];
            u[(row_b, c)] += sign * inv_sqrt2 * src[c];
        }
    };
    for (q, (_, v, sv, jv, jsv)) in quads.iter().enumerate() {
        add(2 * q, 2 * q + 1, 1.0, v);
        add(2 * q, 2 * q + 1, -1.0, sv);
        add(n + 2 * q, n + 2 * q + 1, 1.0, jv);
        add(n + 2 * q, n + 2 * q + 1, -1.0, jsv);
    }
    if let Some((v, jv)) = &leftover {
        for c in 0..dim {
            u[(n - 1, c)] += v[c];
            u[(dim - 1, c)] += jv[c];
        }
    }

    let t_list: Vec<f64> = quads.iter().map(|q| q.0).collect();
    let r = normal_form(n, &t_list, 1.0);
    let r_inv = normal_form(n, &t_list, -1.0);
    let k = m * u.transpose() * r_inv;

    Ok(KruDecomposition { k, r, u, t: t_list })
}

/// Block-diagonal hyperbolic normal form with stretches `sign * t_p`.
fn normal_form(n: usize, t: &[f64], sign: f64) -> DMatrix<f64> {
    let dim = 2 * n;
    let mut r = DMatrix::identity(dim, dim);
    for (q, &tq) in t.iter().enumerate() {
        let (c, s) = ((sign * tq).cosh(), (sign * tq).sinh());
        r[(2 * q, 2 * q)] = c;
        r[(2 * q, 2 * q + 1)] = s;
        r[(2 * q + 1, 2 * q)] = s;
        r[(2 * q + 1, 2 * q + 1)] = c;
        r[(n + 2 * q, n + 2 * q)] = c;
        r[(n + 2 * q, n + 2 * q + 1)] = -s;
        r[(n + 2 * q + 1, n + 2 * q)] = -s;
        r[(n + 2 * q + 1, n + 2 * q + 1)] = c;
    }
    r
}

/// Remove `span(removed)` from the orthonormal family `vectors`.
fn deflate(vectors: &[DVector<f64>], removed: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for r in removed {
            let c = r.dot(&w) / r.norm_squared();
            w -= r * c;
        }
        for k in &kept {
            let c = k.dot(&w);
            w -= k * c;
        }
        let norm = w.norm();
        if norm > 1e-6 {
            kept.push(w / norm);
        }
    }
    if kept.len() + removed.len().min(vectors.len()) < vectors.len() {
        return Err(CoreError::Numerical(
            "deflation removed more directions than expected".into(),
        ));
    }
    Ok(kept)
}

/// Convenience: residual of the KRU reconstruction relative to `||M||`.
pub fn kru_roundtrip_residual(m: &DMatrix<f64>, d: &KruDecomposition) -> f64 {
    (&d.k * &d.r * &d.u - m).norm() / m.norm().max(1.0)
}

/// Random element of the orthosymplectic algebra span with coefficients in
/// [-scale, scale], drawn from the counter-based stream.
pub fn random_spo_algebra_element(n: usize, seed: u64, scale: f64) -> DMatrix<f64> {
    let basis = spo_basis(n);
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for (idx, b) in basis.elements.iter().enumerate() {
        let u = crate::rng::unit_f64(crate::rng::cell_channel_bits(seed, idx as i64, 7));
        out += b * (scale * (2.0 * u - 1.0));
    }
    out
}

/// Frobenius-orthonormality and derivation-condition residual of a basis
/// against the two defining forms.
pub fn algebra_condition_residual(xi: &DMatrix<f64>, form: &DMatrix<f64>) -> f64 {
    (xi.transpose() * form + form * xi).norm()
}
