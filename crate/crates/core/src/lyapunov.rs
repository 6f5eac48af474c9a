//! Lyapunov-spectrum estimation from the transfer-matrix cocycle.
//!
//! The full 2N-frame is evolved under the cocycle with periodic QR
//! re-orthonormalization; the accumulated logs of the R diagonals divided by
//! the traversed length estimate the exponents. Standard errors come from
//! batch means over contiguous blocks of cells.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::model::{CellTransferCache, ModelSpec};
use crate::rng;

pub const DEFAULT_BATCHES: usize = 50;

/// QR-factorized running product: orthonormal frame plus accumulated
/// per-direction log-stretch sums.
#[derive(Debug, Clone)]
pub struct CocycleAccumulator {
    pub frame: DMatrix<f64>,
    pub log_stretch: DVector<f64>,
    pub steps: usize,
    pub reorth_period: usize,
    since_reorth: usize,
}

impl CocycleAccumulator {
    pub fn new(dim: usize, reorth_period: usize) -> Self {
        assert!(reorth_period >= 1);
        CocycleAccumulator {
            frame: DMatrix::identity(dim, dim),
            log_stretch: DVector::zeros(dim),
            steps: 0,
            reorth_period,
            since_reorth: 0,
        }
    }

    /// Multiply one factor into the frame, re-orthonormalizing on schedule
    /// (or early if the entries threaten to overflow).
    pub fn step(&mut self, t: &DMatrix<f64>) {
        self.frame = t * &self.frame;
        self.steps += 1;
        self.since_reorth += 1;
        if self.since_reorth >= self.reorth_period || self.frame.norm() > 1e130 {
            self.reorthonormalize();
        }
    }

    pub fn reorthonormalize(&mut self) {
        if self.since_reorth == 0 {
            return;
        }
        let (q, r) = linalg::qr_nonneg(&self.frame);
        for i in 0..self.log_stretch.len() {
            self.log_stretch[i] += r[(i, i)].max(f64::MIN_POSITIVE).ln();
        }
        self.frame = q;
        self.since_reorth = 0;
    }
}

/// Estimated exponents (units: inverse length), non-increasing, with batch
/// standard errors.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub gamma: Vec<f64>,
    pub stderr: Vec<f64>,
    pub steps: usize,
    pub energy: f64,
}

impl LyapunovEstimate {
    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().copied().fold(0.0, f64::max)
    }

    pub fn top_half_sum(&self) -> f64 {
        let n = self.gamma.len() / 2;
        self.gamma[..n].iter().sum()
    }
}

/// Spectrum of a cocycle fed by an arbitrary factor source (step index ->
/// matrix). Used directly by deterministic-word tests and by the model
/// estimators below.
pub fn cocycle_spectrum<F>(
    dim: usize,
    ell: f64,
    steps: usize,
    reorth_period: usize,
    batches: usize,
    mut factor: F,
) -> LyapunovEstimate
where
    F: FnMut(usize) -> DMatrix<f64>,
{
    assert!(steps >= 1);
    let batches = batches.clamp(1, steps);
    let mut acc = CocycleAccumulator::new(dim, reorth_period);
    let mut batch_rates: Vec<Vec<f64>> = vec![Vec::with_capacity(batches); dim];
    let mut last_snapshot = DVector::zeros(dim);
    let mut last_step = 0usize;

    let base = steps / batches;
    let remainder = steps % batches;
    let mut boundary = 0usize;
    for b in 0..batches {
        boundary += base + usize::from(b < remainder);
        while acc.steps < boundary {
            let t = factor(acc.steps);
            acc.step(&t);
        }
        acc.reorthonormalize();
        let len = (acc.steps - last_step) as f64 * ell;
        for p in 0..dim {
            batch_rates[p].push((acc.log_stretch[p] - last_snapshot[p]) / len);
        }
        last_snapshot = acc.log_stretch.clone();
        last_step = acc.steps;
    }

    let total_len = steps as f64 * ell;
    let mut pairs: Vec<(f64, f64)> = (0..dim)
        .map(|p| {
            let gamma = acc.log_stretch[p] / total_len;
            let (_, se) = linalg::mean_stderr(&batch_rates[p]);
            (gamma, se)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    LyapunovEstimate {
        gamma: pairs.iter().map(|p| p.0).collect(),
        stderr: pairs.iter().map(|p| p.1).collect(),
        steps,
        energy: f64::NAN,
    }
}

/// Draw the disorder configuration of one cell directly from the
/// counter-based stream (identical to the corresponding `sample_word` cell).
fn draw_cell(spec: &ModelSpec, seed: u64, n: i64) -> DVector<f64> {
    let mut cell = DVector::zeros(spec.n);
    for (i, law) in spec.disorder.iter().enumerate() {
        cell[i] = law.draw(rng::unit_f64(rng::cell_channel_bits(seed, n, i as u64)));
    }
    cell
}

/// Lyapunov spectrum of the model cocycle at one energy.
pub fn lyapunov_spectrum(
    spec: &ModelSpec,
    energy: f64,
    steps: usize,
    seed: u64,
    reorth_period: usize,
) -> Result<LyapunovEstimate> {
    if steps == 0 {
        return Err(CoreError::Parameter("need at least one step".into()));
    }
    spec.validate()?;
    // after validation the per-cell construction cannot fail: the generator
    // is finite and the exponential of a finite matrix always exists
    let mut cache = CellTransferCache::new(spec, energy);
    let mut est = cocycle_spectrum(2 * spec.n, spec.ell, steps, reorth_period, DEFAULT_BATCHES, |k| {
        let omega = draw_cell(spec, seed, k as i64);
        cache.get(&omega).expect("cell transfer of a validated model").clone()
    });
    est.energy = energy;
    Ok(est)
}

/// `max_i |gamma_i + gamma_{2N-i+1}|`: deviation from the symplectic
/// symmetry of the spectrum.
pub fn symmetry_residual(est: &LyapunovEstimate) -> f64 {
    let d = est.gamma.len();
    (0..d / 2)
        .map(|i| (est.gamma[i] + est.gamma[d - 1 - i]).abs())
        .fold(0.0, f64::max)
}

/// `max_p |gamma_{2p-1} - gamma_{2p}|`: deviation from the two-fold
/// degeneracy of orthosymplectic cocycles.
pub fn degeneracy_residual(est: &LyapunovEstimate) -> f64 {
    let d = est.gamma.len();
    (0..d / 2)
        .map(|p| (est.gamma[2 * p] - est.gamma[2 * p + 1]).abs())
        .fold(0.0, f64::max)
}

/// Volume-growth rate of an N-frame under the cocycle, computed as the QR
/// log-volume of the evolved frame per unit length; converges to the sum of
/// the top N exponents.
pub fn directional_sum_check(
    spec: &ModelSpec,
    energy: f64,
    frame: &DMatrix<f64>,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let dim = 2 * spec.n;
    if frame.nrows() != dim || frame.ncols() != spec.n {
        return Err(CoreError::Dimension(format!(
            "frame must be {}x{}, got {}x{}",
            dim,
            spec.n,
            frame.nrows(),
            frame.ncols()
        )));
    }
    let sv = linalg::singular_values(frame);
    if sv.last().copied().unwrap_or(0.0) <= 1e-10 * sv[0] {
        return Err(CoreError::Parameter("frame is rank deficient".into()));
    }
    let mut cache = CellTransferCache::new(spec, energy);
    let mut x = frame.clone();
    let mut log_vol = {
        let (_, r) = linalg::qr_nonneg(&x);
        (0..spec.n).map(|i| r[(i, i)].ln()).sum::<f64>()
    };
    x = linalg::orthonormalize_columns(&x);
    for k in 0..steps {
        let omega = draw_cell(spec, seed, k as i64);
        x = cache.get(&omega)? * x;
        let (q, r) = linalg::qr_nonneg(&x);
        for i in 0..spec.n {
            log_vol += r[(i, i)].max(f64::MIN_POSITIVE).ln();
        }
        x = q.columns(0, spec.n).into_owned();
    }
    Ok(log_vol / (spec.ell * steps as f64))
}

/// Named Lagrangian frames of the half-dimensional structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFlavor {
    FPlus,
    FMinus,
    FPlusPlus,
    FPlusMinus,
    FMinusPlus,
    FMinusMinus,
    Custom,
}

/// A frame with orthonormal columns spanning an isotropic subspace.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    pub basis: DMatrix<f64>,
    pub flavor: FrameFlavor,
}

impl LagrangianFrame {
    /// The standard frames: `FPlus`/`FMinus` span the up/down components;
    /// the four signed flavors pair adjacent lines (they need N even).
    pub fn standard(flavor: FrameFlavor, n: usize) -> Result<Self> {
        let dim = 2 * n;
        let basis = match flavor {
            FrameFlavor::FPlus | FrameFlavor::FMinus => {
                let offset = if flavor == FrameFlavor::FPlus { 0 } else { n };
                DMatrix::from_fn(dim, n, |r, c| if r == offset + c { 1.0 } else { 0.0 })
            }
            FrameFlavor::Custom => {
                return Err(CoreError::Parameter("custom flavor needs an explicit basis".into()))
            }
            _ => {
                if n % 2 != 0 {
                    return Err(CoreError::Parameter("signed flavors need an even line count".into()));
                }
                let d = n / 2;
                let (offset, sign) = match flavor {
                    FrameFlavor::FPlusPlus => (0, 1.0),
                    FrameFlavor::FPlusMinus => (0, -1.0),
                    FrameFlavor::FMinusPlus => (n, 1.0),
                    FrameFlavor::FMinusMinus => (n, -1.0),
                    _ => unreachable!(),
                };
                let c = std::f64::consts::FRAC_1_SQRT_2;
                DMatrix::from_fn(dim, d, |r, k| {
                    if r == offset + 2 * k {
                        c
                    } else if r == offset + 2 * k + 1 {
                        sign * c
                    } else {
                        0.0
                    }
                })
            }
        };
        Ok(LagrangianFrame { basis, flavor })
    }

    pub fn custom(basis: DMatrix<f64>) -> Result<Self> {
        let g = basis.transpose() * &basis;
        let id = DMatrix::identity(basis.ncols(), basis.ncols());
        if (g - id).norm() > 1e-10 {
            return Err(CoreError::Parameter("frame columns must be orthonormal".into()));
        }
        Ok(LagrangianFrame { basis, flavor: FrameFlavor::Custom })
    }

    /// Residuals of `B^t J B` and `B^t S B`.
    pub fn isotropy_residuals(&self, n: usize) -> (f64, f64) {
        let j = crate::matgroup::symplectic_form(n);
        let s = crate::matgroup::signature_form(n);
        let jr = (self.basis.transpose() * j * &self.basis).norm();
        let sr = (self.basis.transpose() * s * &self.basis).norm();
        (jr, sr)
    }
}

/// Singular values of `T B`, sorted non-increasing.
pub fn projected_singular_values(t: &DMatrix<f64>, frame: &LagrangianFrame) -> Vec<f64> {
    linalg::singular_values(&(t * &frame.basis))
}

/// Product of the word's cell transfers with scalar rebalancing; returns the
/// projected (or full) factor and the pulled-out log scale.
fn balanced_product(
    cache: &mut CellTransferCache,
    spec: &ModelSpec,
    seed: u64,
    n_cells: usize,
    frame: Option<&LagrangianFrame>,
) -> Result<(DMatrix<f64>, f64)> {
    let dim = 2 * spec.n;
    let mut x = match frame {
        Some(f) => f.basis.clone(),
        None => DMatrix::identity(dim, dim),
    };
    let mut log_scale = 0.0;
    for k in 0..n_cells {
        let omega = draw_cell(spec, seed, k as i64);
        x = cache.get(&omega)? * x;
        let norm = x.norm();
        if norm > 1e150 {
            x /= norm;
            log_scale += norm.ln();
        }
    }
    Ok((x, log_scale))
}

#[derive(Debug, Clone)]
pub struct LdpEstimate {
    pub p_hat: f64,
    pub ci: (f64, f64),
    pub samples: usize,
}

/// Empirical probability that the finite-size rate `(1/(ell n)) log s_p`
/// deviates from `gamma_p` by at least `eps`, with a Wilson 95% interval.
#[allow(clippy::too_many_arguments)]
pub fn ldp_probability(
    spec: &ModelSpec,
    energy: f64,
    p: usize,
    eps: f64,
    n_cells: usize,
    samples: usize,
    frame: Option<&LagrangianFrame>,
    gamma_ref: &[f64],
    seed: u64,
) -> Result<LdpEstimate> {
    let dim = 2 * spec.n;
    if samples < 100 {
        return Err(CoreError::Parameter("need at least 100 samples".into()));
    }
    let max_p = frame.map(|f| f.basis.ncols()).unwrap_or(dim);
    if p == 0 || p > max_p {
        return Err(CoreError::Parameter(format!("singular value index {p} outside 1..={max_p}")));
    }
    if gamma_ref.len() != dim {
        return Err(CoreError::Parameter("gamma_ref must list all 2N exponents".into()));
    }
    let gamma_p = gamma_ref[p - 1];

    let hits: Vec<bool> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut cache = CellTransferCache::new(spec, energy);
            let sample_seed = rng::substream(seed, s as u64);
            let (x, log_scale) =
                balanced_product(&mut cache, spec, sample_seed, n_cells, frame).unwrap();
            let sv = linalg::singular_values(&x);
            let log_sp = log_scale + sv[p - 1].max(f64::MIN_POSITIVE).ln();
            let rate = log_sp / (spec.ell * n_cells as f64);
            (rate - gamma_p).abs() >= eps
        })
        .collect();

    let k = hits.iter().filter(|&&h| h).count();
    Ok(LdpEstimate {
        p_hat: k as f64 / samples as f64,
        ci: linalg::wilson_interval(k, samples),
        samples,
    })
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub estimate: LyapunovEstimate,
    /// How many exponents vanish at the 3-sigma level.
    pub vanishing: usize,
}

#[derive(Debug, Clone)]
pub struct EnergyScan {
    pub points: Vec<ScanPoint>,
    /// Log-log regression exponent of |sum gamma(E) - sum gamma(E')| against
    /// |E - E'| over all grid pairs; a diagnostic, not a certified modulus.
    pub holder_alpha: f64,
    pub holder_c: f64,
    pub holder_r2: f64,
}

/// One spectrum estimate per grid energy (shared disorder word across the
/// grid for variance reduction), plus the empirical Hoelder fit of the
/// exponent sum.
pub fn energy_scan(
    spec: &ModelSpec,
    e_grid: &[f64],
    steps: usize,
    seed: u64,
    reorth_period: usize,
) -> Result<EnergyScan> {
    if e_grid.is_empty() {
        return Err(CoreError::Parameter("empty energy grid".into()));
    }
    if e_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CoreError::Parameter("energy grid must be sorted".into()));
    }
    let estimates: Vec<LyapunovEstimate> = e_grid
        .par_iter()
        .map(|&e| lyapunov_spectrum(spec, e, steps, seed, reorth_period))
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<ScanPoint> = estimates
        .into_iter()
        .map(|est| {
            let vanishing = est
                .gamma
                .iter()
                .zip(&est.stderr)
                .filter(|(g, se)| g.abs() <= (3.0 * **se).max(1e-12))
                .count();
            ScanPoint { estimate: est, vanishing }
        })
        .collect();

    let sums: Vec<f64> = points.iter().map(|p| p.estimate.top_half_sum()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut max_diff = 0.0_f64;
    for i in 0..e_grid.len() {
        for j in (i + 1)..e_grid.len() {
            let de = (e_grid[j] - e_grid[i]).abs();
            let dg = (sums[j] - sums[i]).abs();
            max_diff = max_diff.max(dg);
            if de > 0.0 && dg > 1e-12 {
                xs.push(de.ln());
                ys.push(dg.ln());
            }
        }
    }
    let (holder_alpha, holder_c, holder_r2) = if xs.len() >= 2 {
        let (slope, intercept, _, r2) = linalg::line_fit(&xs, &ys);
        (slope, intercept.exp(), r2)
    } else {
        // essentially flat curve: any exponent works, report the spread
        (1.0, max_diff, 1.0)
    };

    Ok(EnergyScan { points, holder_alpha, holder_c, holder_r2 })
}

/// `gamma_{p+1} - gamma_p`: negative values certify a contracting gap after
/// the p-th direction.
pub fn contractivity_probe(
    spec: &ModelSpec,
    energy: f64,
    p: usize,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let dim = 2 * spec.n;
    if p == 0 || p >= dim {
        return Err(CoreError::Parameter(format!("gap index {p} outside 1..{dim}")));
    }
    let est = lyapunov_spectrum(spec, energy, steps, seed, 1)?;
    Ok(est.gamma[p] - est.gamma[p - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DisorderLaw;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn deterministic_diagonal_word() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let est = cocycle_spectrum(2, 1.0, 400, 1, 10, |_| t.clone());
        assert_relative_eq!(est.gamma[0], 2.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(est.gamma[1], -(2.0_f64.ln()), epsilon = 1e-12);
        assert!(est.stderr[0] < 1e-12);
    }

    #[test]
    fn contractivity_of_deterministic_word() {
        // diag(2, 1, 1, 1/2): the gap after the first direction is -ln 2.
        let t = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[2.0, 1.0, 1.0, 0.5]));
        let est = cocycle_spectrum(4, 1.0, 300, 1, 10, |_| t.clone());
        assert_relative_eq!(est.gamma[1] - est.gamma[0], -(2.0_f64.ln()), epsilon = 1e-10);
    }

    #[test]
    fn free_model_zero_exponents() {
        let spec = ModelSpec::free(1, 0.1);
        let est = lyapunov_spectrum(&spec, 0.9, 10_000, 3, 1).unwrap();
        for g in &est.gamma {
            assert!(g.abs() < 1e-3, "free exponent {g}");
        }
        assert!(symmetry_residual(&est) < 2e-3);
    }

    #[test]
    fn reorth_period_invariance_on_deterministic_word() {
        let spec = ModelSpec::dirac(
            1,
            0.1,
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
            DMatrix::zeros(1, 1),
            vec![DisorderLaw::point_mass(1.0)],
        )
        .unwrap();
        let a = lyapunov_spectrum(&spec, 1.3, 1000, 5, 1).unwrap();
        let b = lyapunov_spectrum(&spec, 1.3, 1000, 5, 2).unwrap();
        for (ga, gb) in a.gamma.iter().zip(&b.gamma) {
            assert!((ga - gb).abs() <= 1e-8, "{ga} vs {gb}");
        }
    }

    #[test]
    fn determinant_conservation() {
        let spec = ModelSpec::case_with_delta(2, 2, 0.1).unwrap();
        let est = lyapunov_spectrum(&spec, 1.0, 20_000, 5, 1).unwrap();
        let total: f64 = est.gamma.iter().sum();
        assert!(total.abs() <= 4.0 * 1e-8 / 0.1, "sum of exponents {total}");
    }

    #[test]
    fn estimator_consistency_split_runs() {
        let spec = ModelSpec::case_with_delta(2, 1, 0.1).unwrap();
        let full = lyapunov_spectrum(&spec, 1.0, 40_000, 17, 1).unwrap();
        let a = lyapunov_spectrum(&spec, 1.0, 20_000, 18, 1).unwrap();
        let b = lyapunov_spectrum(&spec, 1.0, 20_000, 19, 1).unwrap();
        let avg = 0.5 * (a.gamma[0] + b.gamma[0]);
        let combined = (full.stderr[0].powi(2) + 0.25 * (a.stderr[0].powi(2) + b.stderr[0].powi(2)))
            .sqrt();
        assert!(
            (full.gamma[0] - avg).abs() <= 4.0 * combined,
            "{} vs {} ({} combined)",
            full.gamma[0],
            avg,
            combined
        );
    }

    #[test]
    fn directional_sum_matches_top_exponent() {
        // deterministic diag(2, 1/2) with the e1 frame: rate -> ln 2
        let spec = ModelSpec::dirac(
            1,
            1.0,
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            DMatrix::zeros(1, 1),
            vec![DisorderLaw::point_mass(0.0)],
        )
        .unwrap();
        // free model: rate -> 0
        let frame = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let v = directional_sum_check(&spec, 0.7, &frame, 1000, 5).unwrap();
        assert!(v.abs() < 1e-10);
        let bad = DMatrix::from_column_slice(2, 1, &[0.0, 0.0]);
        assert!(directional_sum_check(&spec, 0.7, &bad, 10, 5).is_err());
    }

    #[test]
    fn directional_sum_cross_estimator() {
        let spec = ModelSpec::case_with_delta(2, 2, 0.1).unwrap();
        let est = lyapunov_spectrum(&spec, 1.0, 30_000, 7, 1).unwrap();
        let frame = LagrangianFrame::standard(FrameFlavor::FPlus, 2).unwrap().basis;
        let v = directional_sum_check(&spec, 1.0, &frame, 30_000, 7).unwrap();
        let target = est.gamma[0] + est.gamma[1];
        let tol = 4.0 * (est.stderr[0] + est.stderr[1]) + 1e-3;
        assert!((v - target).abs() <= tol, "{v} vs {target}");
    }

    #[test]
    fn residuals_on_synthetic_spectra() {
        let est = LyapunovEstimate {
            gamma: vec![1.0, 0.2, -0.2, -1.0],
            stderr: vec![0.0; 4],
            steps: 1,
            energy: 0.0,
        };
        assert_eq!(symmetry_residual(&est), 0.0);
        let est2 = LyapunovEstimate {
            gamma: vec![3.0, 3.0, 1.0, 1.0],
            stderr: vec![0.0; 4],
            steps: 1,
            energy: 0.0,
        };
        assert_eq!(degeneracy_residual(&est2), 0.0);
    }

    #[test]
    fn standard_frames_are_isotropic() {
        for flavor in [FrameFlavor::FPlus, FrameFlavor::FMinus] {
            let f = LagrangianFrame::standard(flavor, 3).unwrap();
            let (jr, _) = f.isotropy_residuals(3);
            assert!(jr < 1e-12);
        }
        for flavor in [
            FrameFlavor::FPlusPlus,
            FrameFlavor::FPlusMinus,
            FrameFlavor::FMinusPlus,
            FrameFlavor::FMinusMinus,
        ] {
            let f = LagrangianFrame::standard(flavor, 4).unwrap();
            let (jr, sr) = f.isotropy_residuals(4);
            assert!(jr < 1e-12 && sr < 1e-12, "{flavor:?}: {jr} {sr}");
            assert!(LagrangianFrame::standard(flavor, 3).is_err());
        }
    }

    #[test]
    fn projected_values_identity_and_diag() {
        let f = LagrangianFrame::standard(FrameFlavor::FPlus, 2).unwrap();
        let vals = projected_singular_values(&DMatrix::identity(4, 4), &f);
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let fm = LagrangianFrame::standard(FrameFlavor::FMinus, 1).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0 / 3.0]);
        let vals = projected_singular_values(&t, &fm);
        assert_eq!(vals.len(), 1);
        assert_relative_eq!(vals[0], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn projected_interlaces_below_full() {
        let spec = ModelSpec::case_with_delta(2, 2, 0.1).unwrap();
        let word = crate::model::sample_word(&spec, 3, 0, 40).unwrap();
        let t = crate::model::transfer_interval(&spec, &word, 1.0, 0.0, 4.0).unwrap();
        let full = linalg::singular_values(&t.entries);
        let f = LagrangianFrame::standard(FrameFlavor::FPlus, 2).unwrap();
        let proj = projected_singular_values(&t.entries, &f);
        for (k, v) in proj.iter().enumerate() {
            assert!(*v <= full[k] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ldp_point_mass_is_degenerate() {
        let spec = ModelSpec::dirac(
            1,
            0.1,
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
            DMatrix::zeros(1, 1),
            vec![DisorderLaw::point_mass(1.0)],
        )
        .unwrap();
        let gamma = lyapunov_spectrum(&spec, 1.0, 5000, 1, 1).unwrap();
        let est =
            ldp_probability(&spec, 1.0, 1, 1e6, 50, 100, None, &gamma.gamma, 9).unwrap();
        assert_eq!(est.p_hat, 0.0);
    }

    #[test]
    fn energy_scan_free_model_flat() {
        let spec = ModelSpec::free(1, 0.1);
        let grid: Vec<f64> = (0..6).map(|k| 0.5 + 0.2 * k as f64).collect();
        let scan = energy_scan(&spec, &grid, 2000, 4, 1).unwrap();
        assert_eq!(scan.points.len(), 6);
        assert!(scan.holder_c <= 1e-2, "flat-curve spread {}", scan.holder_c);
        for p in &scan.points {
            assert_eq!(p.vanishing, 2);
        }
    }

    #[test]
    fn scan_rejects_unsorted_grid() {
        let spec = ModelSpec::free(1, 0.1);
        assert!(energy_scan(&spec, &[1.0, 0.5], 10, 1, 1).is_err());
    }
}
