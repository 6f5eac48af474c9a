//! Bracket-closure computation of the algebra generated by the vertex cell
//! generators, classification against the symplectic / orthosymplectic /
//! special-orthogonal targets, the strong-disorder threshold, and the
//! critical-energy scan.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::matgroup;
use crate::model::ModelSpec;

/// Outcome of classifying a closed bracket algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraClass {
    /// dim = 2N^2 + N with every element satisfying the J derivation rule.
    FullSymplectic,
    /// dim = N^2 with every element satisfying both derivation rules.
    OrthoSymplectic,
    /// Every element antisymmetric (compact dynamics, zero exponents).
    InsideSpecialOrthogonal,
    Other,
}

impl std::fmt::Display for AlgebraClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AlgebraClass::FullSymplectic => "sp",
            AlgebraClass::OrthoSymplectic => "spo",
            AlgebraClass::InsideSpecialOrthogonal => "so",
            AlgebraClass::Other => "other",
        };
        write!(f, "{name}")
    }
}

/// Frobenius-orthonormal spanning set of a matrix Lie algebra.
#[derive(Debug, Clone)]
pub struct LieBasis {
    pub elements: Vec<DMatrix<f64>>,
    pub dim: usize,
    pub classification: AlgebraClass,
    pub tol: f64,
    /// False when the closure loop hit the dimension cap before stabilizing.
    pub closed: bool,
}

impl LieBasis {
    /// Largest residual of any pair bracket after projection onto the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in &self.elements {
            for b in &self.elements {
                let br = a * b - b * a;
                let mut res = br.clone();
                for e in &self.elements {
                    let c = linalg::frobenius_inner(&res, e);
                    res -= e * c;
                }
                worst = worst.max(res.norm());
            }
        }
        worst
    }
}

/// Default admission tolerance for new closure directions.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Project `m` out of the span of `basis` twice (the second pass suppresses
/// the drift of single-pass Gram-Schmidt on nearly dependent matrices).
fn project_residual(m: &DMatrix<f64>, basis: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut r = m.clone();
    for _ in 0..2 {
        for e in basis {
            let c = linalg::frobenius_inner(&r, e);
            r -= e * c;
        }
    }
    r
}

/// Breadth-first bracket closure of the generators. New directions are
/// admitted when their residual after projection exceeds
/// `tol * sqrt(|a| |b|)` for operand norms |a|, |b|.
pub fn generate_algebra(
    generators: &[DMatrix<f64>],
    tol: f64,
    max_dim: usize,
) -> Result<LieBasis> {
    if generators.is_empty() {
        return Err(CoreError::Parameter("need at least one generator".into()));
    }
    let shape = generators[0].shape();
    if shape.0 != shape.1 || generators.iter().any(|g| g.shape() != shape) {
        return Err(CoreError::Dimension("generators must share a square shape".into()));
    }

    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    for g in generators {
        let r = project_residual(g, &basis);
        if r.norm() > tol * g.norm().max(1.0) {
            basis.push(&r / r.norm());
        }
    }
    if basis.is_empty() {
        return Err(CoreError::Parameter("generators span the zero algebra".into()));
    }

    // frontier = indices whose brackets with everything are still unexplored
    let mut frontier: Vec<usize> = (0..basis.len()).collect();
    let mut closed = true;
    'outer: while !frontier.is_empty() {
        let mut fresh: Vec<usize> = Vec::new();
        for &i in &frontier {
            let mut j = 0;
            while j < basis.len() {
                let a = basis[i].clone();
                let b = basis[j].clone();
                let br = &a * &b - &b * &a;
                let scale = (a.norm() * b.norm()).sqrt().max(1e-300);
                let r = project_residual(&br, &basis);
                if r.norm() > tol * scale {
                    if basis.len() >= max_dim {
                        closed = false;
                        break 'outer;
                    }
                    basis.push(&r / r.norm());
                    fresh.push(basis.len() - 1);
                }
                j += 1;
            }
        }
        frontier = fresh;
    }

    let dim = basis.len();
    let mut out = LieBasis { elements: basis, dim, classification: AlgebraClass::Other, tol, closed };
    if closed {
        let n = shape.0 / 2;
        out.classification = classify(&out, n)?;
    }
    Ok(out)
}

/// Classification by dimension count plus the derivation conditions.
pub fn classify(basis: &LieBasis, n: usize) -> Result<AlgebraClass> {
    if !basis.closed {
        return Err(CoreError::Parameter("cannot classify an unclosed basis".into()));
    }
    let j = matgroup::symplectic_form(n);
    let s = matgroup::signature_form(n);
    let tol = 1e-7;
    let all_sp = basis
        .elements
        .iter()
        .all(|e| matgroup::algebra_condition_residual(e, &j) <= tol * e.norm().max(1.0));
    let all_spo = all_sp
        && basis
            .elements
            .iter()
            .all(|e| matgroup::algebra_condition_residual(e, &s) <= tol * e.norm().max(1.0));
    let all_antisym =
        basis.elements.iter().all(|e| (e.transpose() + e).norm() <= tol * e.norm().max(1.0));

    if all_antisym {
        return Ok(AlgebraClass::InsideSpecialOrthogonal);
    }
    if basis.dim == 2 * n * n + n && all_sp {
        return Ok(AlgebraClass::FullSymplectic);
    }
    if basis.dim == n * n && all_spo {
        return Ok(AlgebraClass::OrthoSymplectic);
    }
    Ok(AlgebraClass::Other)
}

/// The cell generators over all Bernoulli vertex configurations, in
/// lexicographic order of the configuration tuple.
pub fn vertex_generators(spec: &ModelSpec, energy: f64) -> Result<Vec<DMatrix<f64>>> {
    if spec.n > 16 {
        return Err(CoreError::Parameter("vertex enumeration limited to N <= 16".into()));
    }
    let count = 1usize << spec.n;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut omega = DVector::zeros(spec.n);
        for i in 0..spec.n {
            omega[i] = ((k >> (spec.n - 1 - i)) & 1) as f64;
        }
        out.push(spec.generator(&omega, energy)?);
    }
    Ok(out)
}

/// Strong-disorder threshold report: extreme potential eigenvalues over the
/// vertex configurations, the critical cell length, and the energy interval
/// on which all vertex transfers stay inside the log-neighborhood of radius
/// `d_log_o`.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub ell_c: f64,
    pub interval: Option<(f64, f64)>,
    pub d_log_o: f64,
}

pub fn disorder_threshold(spec: &ModelSpec, d_log_o: f64) -> Result<ThresholdReport> {
    if !(d_log_o > 0.0) {
        return Err(CoreError::Parameter("neighborhood radius must be positive".into()));
    }
    if spec.n > 16 {
        return Err(CoreError::Parameter("vertex enumeration limited to N <= 16".into()));
    }
    let mut lambda_max = f64::NEG_INFINITY;
    let mut lambda_min = f64::INFINITY;
    for k in 0..(1usize << spec.n) {
        let mut omega = DVector::zeros(spec.n);
        for i in 0..spec.n {
            omega[i] = ((k >> (spec.n - 1 - i)) & 1) as f64;
        }
        let v = spec.potential(&omega)?;
        let sym = (&v + v.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        for ev in eig.eigenvalues.iter() {
            lambda_max = lambda_max.max(*ev);
            lambda_min = lambda_min.min(*ev);
        }
    }
    let spread = lambda_max - lambda_min;
    let ell_c = if spread > 0.0 { 2.0 * d_log_o / spread } else { f64::INFINITY };
    let interval = if spec.ell < ell_c {
        Some((lambda_max - d_log_o / spec.ell, lambda_min + d_log_o / spec.ell))
    } else {
        None
    };
    Ok(ThresholdReport { lambda_max, lambda_min, ell_c, interval, d_log_o })
}

#[derive(Debug, Clone)]
pub struct CriticalScanPoint {
    pub energy: f64,
    pub dim: usize,
    pub classification: AlgebraClass,
}

#[derive(Debug, Clone)]
pub struct CriticalScan {
    pub points: Vec<CriticalScanPoint>,
    pub generic_dim: usize,
    /// Candidate critical energies (refined to 1e-6) with the dropped
    /// dimension observed there.
    pub drops: Vec<(f64, usize)>,
}

/// Scan the generated-algebra dimension over the energy grid and refine the
/// location of every dimension drop by bisection against the neighbors.
pub fn critical_energy_scan(spec: &ModelSpec, e_grid: &[f64], tol: f64) -> Result<CriticalScan> {
    if spec.n > 8 {
        return Err(CoreError::Parameter("critical scan limited to N <= 8".into()));
    }
    if e_grid.is_empty() {
        return Err(CoreError::Parameter("empty energy grid".into()));
    }
    if e_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CoreError::Parameter("energy grid must be sorted".into()));
    }
    let max_dim = (2 * spec.n) * (2 * spec.n) + 1;
    let dim_at = |e: f64| -> Result<(usize, AlgebraClass)> {
        let gens = vertex_generators(spec, e)?;
        let basis = generate_algebra(&gens, tol, max_dim)?;
        Ok((basis.dim, basis.classification))
    };

    let points: Vec<CriticalScanPoint> = e_grid
        .par_iter()
        .map(|&e| {
            let (dim, classification) = dim_at(e)?;
            Ok(CriticalScanPoint { energy: e, dim, classification })
        })
        .collect::<Result<Vec<_>>>()?;

    let generic_dim = points.iter().map(|p| p.dim).max().unwrap();
    let mut drops = Vec::new();
    for (idx, p) in points.iter().enumerate() {
        if p.dim < generic_dim {
            // localize the drop boundary from each full-dimension neighbor
            let mut lo = if idx > 0 && points[idx - 1].dim == generic_dim {
                points[idx - 1].energy
            } else {
                p.energy
            };
            let mut hi = p.energy;
            while hi - lo > 1e-6 {
                let mid = 0.5 * (lo + hi);
                if dim_at(mid)?.0 == generic_dim {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut hi2 = if idx + 1 < points.len() && points[idx + 1].dim == generic_dim {
                points[idx + 1].energy
            } else {
                p.energy
            };
            let mut lo2 = p.energy;
            while hi2 - lo2 > 1e-6 {
                let mid = 0.5 * (lo2 + hi2);
                if dim_at(mid)?.0 == generic_dim {
                    hi2 = mid;
                } else {
                    lo2 = mid;
                }
            }
            drops.push((0.5 * (hi + lo2), p.dim));
        }
    }
    Ok(CriticalScan { points, generic_dim, drops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgroup::{spo_basis, symplectic_form};
    use approx::assert_relative_eq;

    #[test]
    fn single_generator_closes_immediately() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let basis = generate_algebra(&[g], CLOSURE_TOL, 5).unwrap();
        assert_eq!(basis.dim, 1);
        assert!(basis.closed);
        assert!(basis.closure_residual() < 1e-12);
    }

    #[test]
    fn sl2_from_two_generators() {
        // [[0,1],[-1,0]] and [[0,2],[0,0]] generate the full 3-dimensional
        // algebra of traceless 2x2 matrices.
        let x0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let x1 = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let basis = generate_algebra(&[x0, x1], CLOSURE_TOL, 10).unwrap();
        assert_eq!(basis.dim, 3);
        assert_eq!(basis.classification, AlgebraClass::FullSymplectic);
    }

    #[test]
    fn spo_basis_classifies_as_spo() {
        for n in [2usize, 3] {
            let b = spo_basis(n);
            let closed = generate_algebra(&b.elements, CLOSURE_TOL, (2 * n) * (2 * n) + 1).unwrap();
            assert_eq!(closed.dim, n * n);
            assert_eq!(closed.classification, AlgebraClass::OrthoSymplectic);
        }
    }

    #[test]
    fn case_lie_algebra_dimensions() {
        // case 2 at E = 1 closes on the full symplectic algebra
        for (n, want) in [(1usize, 3usize), (2, 10)] {
            let spec = ModelSpec::case_with_delta(2, n, 0.1).unwrap();
            let gens = vertex_generators(&spec, 1.0).unwrap();
            assert_eq!(gens.len(), 1 << n);
            let basis = generate_algebra(&gens, CLOSURE_TOL, (2 * n) * (2 * n) + 1).unwrap();
            assert_eq!(basis.dim, want, "case 2 N={n}");
            assert_eq!(basis.classification, AlgebraClass::FullSymplectic);
        }
        // case 5 with the tridiagonal coupling closes on the orthosymplectic
        let spec5 = ModelSpec::case_with_delta(5, 2, 0.1).unwrap();
        let gens = vertex_generators(&spec5, 1.0).unwrap();
        let basis = generate_algebra(&gens, CLOSURE_TOL, 17).unwrap();
        assert_eq!(basis.dim, 4);
        assert_eq!(basis.classification, AlgebraClass::OrthoSymplectic);
    }

    #[test]
    fn case1_generators_stay_antisymmetric() {
        let spec = ModelSpec::case_with_delta(1, 2, 0.1).unwrap();
        let gens = vertex_generators(&spec, 0.8).unwrap();
        let basis = generate_algebra(&gens, CLOSURE_TOL, 17).unwrap();
        assert_eq!(basis.classification, AlgebraClass::InsideSpecialOrthogonal);
    }

    #[test]
    fn vertex_generators_free_duplicates() {
        let spec = ModelSpec::dirac(
            2,
            0.1,
            [0.0; 4],
            [0.0; 4],
            DMatrix::zeros(2, 2),
            vec![crate::model::DisorderLaw::bernoulli(0.5); 2],
        )
        .unwrap();
        let gens = vertex_generators(&spec, 1.5).unwrap();
        let expect = -symplectic_form(2) * 1.5;
        for g in &gens {
            assert_relative_eq!(*g, expect.clone(), epsilon = 1e-14);
        }
    }

    #[test]
    fn monotone_in_generators() {
        let spec = ModelSpec::case_with_delta(2, 2, 0.1).unwrap();
        let gens = vertex_generators(&spec, 1.0).unwrap();
        let small = generate_algebra(&gens[..2], CLOSURE_TOL, 17).unwrap();
        let full = generate_algebra(&gens, CLOSURE_TOL, 17).unwrap();
        assert!(small.dim <= full.dim);
    }

    #[test]
    fn max_dim_reports_unclosed() {
        let spec = ModelSpec::case_with_delta(2, 2, 0.1).unwrap();
        let gens = vertex_generators(&spec, 1.0).unwrap();
        let capped = generate_algebra(&gens, CLOSURE_TOL, 5).unwrap();
        assert!(!capped.closed);
        assert!(classify(&capped, 2).is_err());
    }

    #[test]
    fn threshold_zero_potential() {
        let spec = ModelSpec::free(2, 0.1);
        let rep = disorder_threshold(&spec, 0.5).unwrap();
        assert_eq!(rep.lambda_max, 0.0);
        assert_eq!(rep.lambda_min, 0.0);
        assert!(rep.ell_c.is_infinite());
        // unbounded interval reported as the full line around 0
        let (lo, hi) = rep.interval.unwrap();
        assert!(lo < -1.0 && hi > 1.0);
    }

    #[test]
    fn threshold_case2_n1() {
        let spec = ModelSpec::from_case(2, 1, 0.1, DMatrix::zeros(1, 1)).unwrap();
        let d = 0.37;
        let rep = disorder_threshold(&spec, d).unwrap();
        assert_relative_eq!(rep.lambda_max, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.lambda_min, -1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.ell_c, d, epsilon = 1e-12);
        // interval nonempty iff ell < ell_c
        assert!(rep.interval.is_some());
        let mut tight = spec.clone();
        tight.ell = d * 1.01;
        assert!(disorder_threshold(&tight, d).unwrap().interval.is_none());
    }

    #[test]
    fn critical_scan_finds_zero_energy() {
        let spec = ModelSpec::from_case(2, 1, 0.1, DMatrix::zeros(1, 1)).unwrap();
        let grid: Vec<f64> = (-20..=20).map(|k| 0.1 * k as f64).collect();
        let scan = critical_energy_scan(&spec, &grid, CLOSURE_TOL).unwrap();
        assert_eq!(scan.generic_dim, 3);
        assert_eq!(scan.drops.len(), 1);
        assert!(scan.drops[0].0.abs() < 1e-5, "drop at {}", scan.drops[0].0);
        assert!(scan.drops[0].1 < 3);
    }

    #[test]
    fn critical_scan_constant_dimension_is_empty() {
        let spec = ModelSpec::case_with_delta(1, 2, 0.1).unwrap();
        let grid: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
        let scan = critical_energy_scan(&spec, &grid, CLOSURE_TOL).unwrap();
        assert!(scan.drops.is_empty());
    }
}
