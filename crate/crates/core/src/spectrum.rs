//! Finite-volume Dirichlet spectra by transfer-matrix shooting, the
//! integrated density of states, the Wegner probability and the Thouless
//! residual.
//!
//! The restricted operator on `(-ell L, ell L)` kills the up component at
//! both ends, so `E` is an eigenvalue exactly when the upper-right N x N
//! block of the full-box transfer matrix is singular. Eigenvalues are found
//! by scanning that block's determinant sign and smallest singular value on
//! a grid fine enough to separate roots, then refining.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::model::{CellTransferCache, DisorderWord, ModelSpec};
use crate::rng;

/// Dirichlet box: `half_width` cells on each side of the center cell index.
#[derive(Debug, Clone, Copy)]
pub struct BoxSpec {
    pub half_width: i64,
    pub center: i64,
}

impl BoxSpec {
    pub fn centered(half_width: i64) -> Self {
        BoxSpec { half_width, center: 0 }
    }

    pub fn interval(&self, ell: f64) -> (f64, f64) {
        let x0 = self.center as f64 * ell;
        (x0 - self.half_width as f64 * ell, x0 + self.half_width as f64 * ell)
    }

    /// Cell range covering the box.
    pub fn cells(&self) -> (i64, i64) {
        (self.center - self.half_width, self.center + self.half_width - 1)
    }
}

/// Upper-right N x N block of the full-box transfer matrix.
fn shooting_block(
    spec: &ModelSpec,
    word: &DisorderWord,
    box_spec: &BoxSpec,
    cache: &mut CellTransferCache,
) -> Result<DMatrix<f64>> {
    let n = spec.n;
    let (lo, hi) = box_spec.cells();
    if !word.covers(lo, hi) {
        let (a, b) = box_spec.interval(spec.ell);
        return Err(CoreError::Coverage { lo: a, hi: b });
    }
    let mut acc = DMatrix::identity(2 * n, 2 * n);
    for cell in lo..=hi {
        acc = cache.get(word.cell(cell))? * acc;
    }
    Ok(acc.view((0, n), (n, n)).into_owned())
}

/// Determinant of the shooting block; `E` is a Dirichlet eigenvalue of the
/// boxed operator iff this vanishes.
pub fn boundary_determinant(
    spec: &ModelSpec,
    word: &DisorderWord,
    box_spec: &BoxSpec,
    energy: f64,
) -> Result<f64> {
    let mut cache = CellTransferCache::new(spec, energy);
    let block = shooting_block(spec, word, box_spec, &mut cache)?;
    let (sign, log_abs) = linalg::sign_log_det(&block);
    Ok(sign * log_abs.exp())
}

/// Relative singular-value threshold below which a direction counts toward
/// the multiplicity of a root.
const MULTIPLICITY_TOL: f64 = 1e-7;
/// Root refinement width.
const ROOT_TOL: f64 = 1e-10;

struct GridSample {
    energy: f64,
    det_sign: f64,
    sigma_min: f64,
    sigma_max: f64,
}

fn block_at(
    spec: &ModelSpec,
    word: &DisorderWord,
    box_spec: &BoxSpec,
    energy: f64,
) -> Result<DMatrix<f64>> {
    let mut cache = CellTransferCache::new(spec, energy);
    shooting_block(spec, word, box_spec, &mut cache)
}

/// All Dirichlet eigenvalues (with multiplicities) of the boxed operator in
/// the window. Sign changes of the determinant catch odd-multiplicity roots;
/// dips of the smallest singular value without a sign change are refined by
/// golden-section search and kept when the block is genuinely rank
/// deficient, which catches even multiplicities.
pub fn restricted_eigenvalues(
    spec: &ModelSpec,
    word: &DisorderWord,
    box_spec: &BoxSpec,
    window: (f64, f64),
) -> Result<Vec<(f64, usize)>> {
    let (e_lo, e_hi) = window;
    if !(e_lo.is_finite() && e_hi.is_finite() && e_lo < e_hi) {
        return Err(CoreError::Parameter("window must be a finite nonempty interval".into()));
    }
    let half_len = spec.ell * box_spec.half_width as f64;
    let step = std::f64::consts::PI / (8.0 * half_len * (1.0 + spec.potential_bound()));
    let count = ((e_hi - e_lo) / step).ceil() as usize + 1;

    let samples: Vec<GridSample> = (0..=count)
        .map(|k| {
            let energy = e_lo + (e_hi - e_lo) * k as f64 / count as f64;
            let block = block_at(spec, word, box_spec, energy)?;
            let (sign, _) = linalg::sign_log_det(&block);
            let sv = linalg::singular_values(&block);
            Ok(GridSample {
                energy,
                det_sign: sign,
                sigma_min: *sv.last().unwrap(),
                sigma_max: sv[0],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = samples.iter().map(|s| s.sigma_max).fold(1.0_f64, f64::max);

    let mut roots: Vec<(f64, usize)> = Vec::new();
    let mut push_root = |e: f64, spec: &ModelSpec| -> Result<()> {
        let block = block_at(spec, word, box_spec, e)?;
        let sv = linalg::singular_values(&block);
        let mult = sv.iter().filter(|&&s| s < MULTIPLICITY_TOL * scale).count();
        if mult > 0 && !roots.iter().any(|&(r, _)| (r - e).abs() < 1e-8) {
            roots.push((e, mult));
        }
        Ok(())
    };

    // odd-multiplicity roots: determinant sign changes
    for w in samples.windows(2) {
        if w[0].det_sign != 0.0 && w[1].det_sign != 0.0 && w[0].det_sign != w[1].det_sign {
            let mut a = w[0].energy;
            let mut b = w[1].energy;
            let sa = w[0].det_sign;
            while b - a > ROOT_TOL {
                let m = 0.5 * (a + b);
                let block = block_at(spec, word, box_spec, m)?;
                let (sm, _) = linalg::sign_log_det(&block);
                if sm == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            push_root(0.5 * (a + b), spec)?;
        }
    }

    // even-multiplicity roots: local dips of the smallest singular value
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for k in 1..samples.len().saturating_sub(1) {
        // only the local-minimum shape gates a candidate; the magnitude
        // filter is applied after refinement
        let is_dip = samples[k].sigma_min <= samples[k - 1].sigma_min
            && samples[k].sigma_min <= samples[k + 1].sigma_min;
        if !is_dip {
            continue;
        }
        let sigma_at = |e: f64| -> Result<f64> {
            let block = block_at(spec, word, box_spec, e)?;
            Ok(*linalg::singular_values(&block).last().unwrap())
        };
        let mut a = samples[k - 1].energy;
        let mut b = samples[k + 1].energy;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = sigma_at(x1)?;
        let mut f2 = sigma_at(x2)?;
        while b - a > ROOT_TOL {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = sigma_at(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = sigma_at(x2)?;
            }
        }
        push_root(0.5 * (a + b), spec)?;
    }

    roots.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    Ok(roots)
}

/// Signed eigenvalue count between 0 and `e`, divided by the box length.
fn signed_count(eigs: &[(f64, usize)], e: f64) -> i64 {
    if e >= 0.0 {
        eigs.iter().filter(|&&(x, _)| x > 1e-12 && x <= e).map(|&(_, m)| m as i64).sum()
    } else {
        -eigs.iter().filter(|&&(x, _)| x > e && x <= -1e-12).map(|&(_, m)| m as i64).sum::<i64>()
    }
}

/// Disorder-averaged integrated density of states on a grid.
#[derive(Debug, Clone)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub f: Vec<f64>,
    pub stderr: Vec<f64>,
    pub box_half_width: i64,
    pub samples: usize,
    /// Cell length of the generating model (the normalization uses it).
    pub ell: f64,
}

pub fn ids_estimate(
    spec: &ModelSpec,
    box_half_width: i64,
    samples: usize,
    e_grid: &[f64],
    seed: u64,
) -> Result<IdsCurve> {
    if e_grid.is_empty() || samples == 0 {
        return Err(CoreError::Parameter("need a nonempty grid and at least one sample".into()));
    }
    if e_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::Parameter("energy grid must be strictly increasing".into()));
    }
    let box_spec = BoxSpec::centered(box_half_width);
    let lo = e_grid[0].min(0.0) - 1e-6;
    let hi = e_grid[e_grid.len() - 1].max(0.0) + 1e-6;
    let norm = 2.0 * spec.ell * box_half_width as f64;

    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let word_seed = rng::substream(seed, s as u64);
            let (c_lo, c_hi) = box_spec.cells();
            let word = crate::model::sample_word(spec, word_seed, c_lo, c_hi)?;
            let eigs = restricted_eigenvalues(spec, &word, &box_spec, (lo, hi))?;
            Ok(e_grid.iter().map(|&e| signed_count(&eigs, e) as f64 / norm).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut f = Vec::with_capacity(e_grid.len());
    let mut stderr = Vec::with_capacity(e_grid.len());
    for j in 0..e_grid.len() {
        let col: Vec<f64> = per_sample.iter().map(|row| row[j]).collect();
        let (mean, se) = linalg::mean_stderr(&col);
        f.push(mean);
        stderr.push(se);
    }
    Ok(IdsCurve {
        energies: e_grid.to_vec(),
        f,
        stderr,
        box_half_width,
        samples,
        ell: spec.ell,
    })
}

/// Empirical frequency of the event
/// `dist(E, spectrum of the boxed operator) <= exp(-sigma L^beta)`.
#[allow(clippy::too_many_arguments)]
pub fn wegner_probability(
    spec: &ModelSpec,
    energy: f64,
    box_half_width: i64,
    sigma: f64,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, (f64, f64))> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(CoreError::Parameter("beta must lie in (0, 1)".into()));
    }
    if samples == 0 {
        return Err(CoreError::Parameter("need at least one sample".into()));
    }
    let radius = (-sigma * (box_half_width as f64).powf(beta)).exp();
    let box_spec = BoxSpec::centered(box_half_width);
    let half_len = spec.ell * box_half_width as f64;
    let margin = std::f64::consts::PI / (4.0 * half_len * (1.0 + spec.potential_bound()));
    let window = (energy - radius - margin, energy + radius + margin);

    let hits: Vec<bool> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let word_seed = rng::substream(seed, s as u64);
            let (c_lo, c_hi) = box_spec.cells();
            let word = crate::model::sample_word(spec, word_seed, c_lo, c_hi)?;
            let eigs = restricted_eigenvalues(spec, &word, &box_spec, window)?;
            Ok(eigs.iter().any(|&(x, _)| (x - energy).abs() <= radius))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = hits.iter().filter(|&&h| h).count();
    Ok((k as f64 / samples as f64, linalg::wilson_interval(k, samples)))
}

/// Kernel of the Thouless identity: `ln|E - t| - (1/2) ln(t^2 + 1)`.
pub fn thouless_kernel(e: f64, t: f64) -> f64 {
    (e - t).abs().ln() - 0.5 * (t * t + 1.0).ln()
}

/// Margin by which the IDS window must exceed the evaluation window.
pub const THOULESS_MARGIN: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct ThoulessReport {
    pub a_fit: f64,
    pub max_residual: f64,
    /// Estimated magnitude of the neglected integral tails.
    pub truncation_bound: f64,
    pub eval_window: (f64, f64),
    pub ids_window: (f64, f64),
}

/// Residual of the exponent-sum identity after fitting the single constant:
/// the log-kernel Stieltjes integral against `d(F - F_0)` is computed by
/// midpoint sums on the IDS grid and compared with the measured exponent
/// sums on the evaluation grid.
pub fn thouless_residual(
    gamma_curve: &[(f64, f64)],
    ids: &IdsCurve,
    free_f: &[f64],
    e_eval: &[f64],
) -> Result<ThoulessReport> {
    if ids.energies.len() < 2 || free_f.len() != ids.energies.len() {
        return Err(CoreError::Parameter(
            "free IDS must be sampled on the measured IDS grid".into(),
        ));
    }
    if e_eval.is_empty() {
        return Err(CoreError::Parameter("empty evaluation grid".into()));
    }
    let ids_lo = ids.energies[0];
    let ids_hi = *ids.energies.last().unwrap();
    let eval_lo = e_eval.iter().copied().fold(f64::INFINITY, f64::min);
    let eval_hi = e_eval.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if eval_lo - ids_lo < THOULESS_MARGIN || ids_hi - eval_hi < THOULESS_MARGIN {
        return Err(CoreError::Parameter(format!(
            "IDS window [{ids_lo}, {ids_hi}] must exceed the evaluation window \
             [{eval_lo}, {eval_hi}] by a margin of {THOULESS_MARGIN} on both sides"
        )));
    }

    // deviation increments of (F - F_0) between grid nodes
    let dev: Vec<f64> = ids.f.iter().zip(free_f).map(|(a, b)| a - b).collect();
    let mids: Vec<f64> =
        ids.energies.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let increments: Vec<f64> = dev.windows(2).map(|w| w[1] - w[0]).collect();

    let gamma_at = |e: f64| -> Result<f64> {
        gamma_curve
            .iter()
            .find(|&&(ge, _)| (ge - e).abs() < 1e-9)
            .map(|&(_, g)| g)
            .ok_or_else(|| {
                CoreError::Parameter(format!("no exponent sum supplied at energy {e}"))
            })
    };

    let mut integrals = Vec::with_capacity(e_eval.len());
    let mut sums = Vec::with_capacity(e_eval.len());
    for &e in e_eval {
        if mids.iter().any(|&m| (m - e).abs() < 1e-12) {
            return Err(CoreError::Parameter(format!(
                "evaluation energy {e} collides with an IDS midpoint; align the grids"
            )));
        }
        let integral: f64 =
            mids.iter().zip(&increments).map(|(&m, &dm)| thouless_kernel(e, m) * dm).sum();
        integrals.push(integral);
        sums.push(gamma_at(e)?);
    }

    // gamma_sum = -a + integral  =>  a = integral - gamma_sum
    let a_fit = integrals
        .iter()
        .zip(&sums)
        .map(|(i, g)| i - g)
        .sum::<f64>()
        / e_eval.len() as f64;
    let max_residual = integrals
        .iter()
        .zip(&sums)
        .map(|(i, g)| (g - (i - a_fit)).abs())
        .fold(0.0, f64::max);

    // tail estimate: |d(F - F_0)| mass beyond the window times the kernel
    // variation there, evaluated at the worst evaluation energy
    let dev_edge = dev[0].abs().max(dev.last().unwrap().abs()).max(1.0 / (2.0 * ids.ell * ids.box_half_width as f64));
    let tail = |e: f64| -> f64 {
        let up = ((ids_hi - e) / (ids_hi * ids_hi + 1.0).sqrt()).abs().ln().abs();
        let dn = ((e - ids_lo) / (ids_lo * ids_lo + 1.0).sqrt()).abs().ln().abs();
        dev_edge * (up + dn)
    };
    let truncation_bound = e_eval.iter().map(|&e| tail(e)).fold(0.0, f64::max);

    Ok(ThoulessReport {
        a_fit,
        max_residual,
        truncation_bound,
        eval_window: (eval_lo, eval_hi),
        ids_window: (ids_lo, ids_hi),
    })
}
