//! Command dispatch: build the model, run the requested estimator inside a
//! worker pool of the configured size, and write one data file plus one
//! manifest. Identical (config, seed) produce byte-identical data files
//! regardless of the worker count: all parallel maps are indexed and reduced
//! in task order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dirac_loc_core::green::{green_decay_fit, regularity_probability};
use dirac_loc_core::liealgebra::{
    critical_energy_scan, disorder_threshold, generate_algebra, vertex_generators, CLOSURE_TOL,
};
use dirac_loc_core::lyapunov::{
    energy_scan, ldp_probability, lyapunov_spectrum, FrameFlavor, LagrangianFrame,
};
use dirac_loc_core::matgroup::{is_orthogonal, is_spo, is_symplectic};
use dirac_loc_core::rng;
use dirac_loc_core::spectrum::{ids_estimate, thouless_residual, wegner_probability};
use nalgebra::DVector;

use crate::config::{Command, ExperimentConfig};
use crate::emit::{emit_plot_data, PlotKind, Table};
use crate::CliError;

pub struct RunOutput {
    pub data_path: PathBuf,
    pub manifest_path: PathBuf,
    pub plot_path: Option<PathBuf>,
}

/// FNV-1a over the produced bytes; recorded in the manifest so determinism
/// regressions show up as a one-line diff.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

struct DataFile {
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl DataFile {
    fn new(columns: Vec<String>) -> Self {
        DataFile { header: Vec::new(), columns, rows: Vec::new() }
    }

    fn comment(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    fn row(&mut self, values: Vec<String>) {
        assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    fn render(&self, manifest_name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# manifest: {manifest_name}");
        for line in &self.header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    let (data, plot) = pool.install(|| dispatch(config))?;

    let out_dir = Path::new(&config.output_path);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let stem = config.command.name();
    let ext = if config.command == Command::Thouless { "json" } else { "csv" };
    let data_path = out_dir.join(format!("{stem}.{ext}"));
    let manifest_path = out_dir.join(format!("{stem}.manifest"));
    let manifest_name = format!("{stem}.manifest");

    let bytes = match &data {
        Output::Csv(file) => file.render(&manifest_name),
        Output::Json(text) => text.clone(),
    };
    std::fs::write(&data_path, &bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", data_path.display())))?;

    let plot_path = match plot {
        Some((table, kind)) => {
            let p = out_dir.join(format!("{stem}.plot"));
            emit_plot_data(&table, kind, &p)?;
            Some(p)
        }
        None => None,
    };

    let mut manifest = String::new();
    let _ = writeln!(manifest, "command = {}", config.command.name());
    let _ = writeln!(manifest, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "seed = {}", config.seed);
    let _ = writeln!(manifest, "workers = {}", config.workers);
    for (k, v) in config.raw() {
        let _ = writeln!(manifest, "config.{k} = {v}");
    }
    let _ = writeln!(manifest, "determinism_hash = {:016x}", fnv1a64(bytes.as_bytes()));
    let _ = writeln!(manifest, "wall_time_s = {:.3}", started.elapsed().as_secs_f64());
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", manifest_path.display())))?;

    Ok(RunOutput { data_path, manifest_path, plot_path })
}

enum Output {
    Csv(DataFile),
    Json(String),
}

fn spectrum_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["energy".to_string()];
    for p in 1..=dim {
        cols.push(format!("gamma_{p}"));
    }
    for p in 1..=dim {
        cols.push(format!("stderr_{p}"));
    }
    cols.push("steps".into());
    cols.push("seed".into());
    cols
}

fn spectrum_row(est: &dirac_loc_core::lyapunov::LyapunovEstimate, seed: u64) -> Vec<String> {
    let mut row = vec![fmt_f(est.energy)];
    row.extend(est.gamma.iter().map(|g| fmt_f(*g)));
    row.extend(est.stderr.iter().map(|s| fmt_f(*s)));
    row.push(est.steps.to_string());
    row.push(seed.to_string());
    row
}

fn dispatch(config: &ExperimentConfig) -> Result<(Output, Option<(Table, PlotKind)>), CliError> {
    match config.command {
        Command::Lyapunov => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let steps = config.u64_req("steps")? as usize;
            let reorth = config.u64_or("reorth", 1)? as usize;
            let est = lyapunov_spectrum(&spec, energy, steps, config.seed, reorth)?;
            let mut file = DataFile::new(spectrum_columns(2 * spec.n));
            file.row(spectrum_row(&est, config.seed));
            Ok((Output::Csv(file), None))
        }
        Command::Scan => {
            let spec = config.model()?;
            let grid = config.grid("e_min", "e_max", "e_step")?;
            let steps = config.u64_req("steps")? as usize;
            let reorth = config.u64_or("reorth", 1)? as usize;
            let scan = energy_scan(&spec, &grid, steps, config.seed, reorth)?;
            let mut cols = spectrum_columns(2 * spec.n);
            cols.push("vanishing".into());
            let mut file = DataFile::new(cols);
            file.comment(format!("holder_alpha = {}", scan.holder_alpha));
            file.comment(format!("holder_c = {}", scan.holder_c));
            file.comment(format!("holder_r2 = {}", scan.holder_r2));
            file.comment("drops between grid points are not excluded by the scan".to_string());
            let mut table = Table::new(&["energy", "sum_gamma", "band"]);
            for p in &scan.points {
                let mut row = spectrum_row(&p.estimate, config.seed);
                row.push(p.vanishing.to_string());
                file.row(row);
                table.push(vec![
                    p.estimate.energy,
                    p.estimate.top_half_sum(),
                    p.estimate.max_stderr(),
                ]);
            }
            let plot = config.plot.then_some((table, PlotKind::GammaVsE));
            Ok((Output::Csv(file), plot))
        }
        Command::Lie => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let tol = config.f64_or("tol", CLOSURE_TOL)?;
            let n = spec.n;
            let max_dim = config.u64_or("max_dim", ((2 * n) * (2 * n) + 1) as u64)? as usize;
            let gens = vertex_generators(&spec, energy)?;
            let basis = generate_algebra(&gens, tol, max_dim)?;
            let mut file = DataFile::new(
                ["energy", "dim", "classification", "closed"].iter().map(|s| s.to_string()).collect(),
            );
            file.row(vec![
                fmt_f(energy),
                basis.dim.to_string(),
                basis.classification.to_string(),
                basis.closed.to_string(),
            ]);
            Ok((Output::Csv(file), None))
        }
        Command::Threshold => {
            let spec = config.model()?;
            let d = config.f64_or("d_log_o", 0.5)?;
            let rep = disorder_threshold(&spec, d)?;
            let mut file = DataFile::new(
                ["lambda_max", "lambda_min", "ell_c", "interval_lo", "interval_hi", "d_log_o"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            let (lo, hi) = rep.interval.map(|(a, b)| (fmt_f(a), fmt_f(b))).unwrap_or_else(|| {
                ("nan".to_string(), "nan".to_string())
            });
            file.row(vec![
                fmt_f(rep.lambda_max),
                fmt_f(rep.lambda_min),
                fmt_f(rep.ell_c),
                lo,
                hi,
                fmt_f(rep.d_log_o),
            ]);
            Ok((Output::Csv(file), None))
        }
        Command::Critical => {
            let spec = config.model()?;
            let grid = config.grid("e_min", "e_max", "e_step")?;
            let tol = config.f64_or("tol", CLOSURE_TOL)?;
            let scan = critical_energy_scan(&spec, &grid, tol)?;
            let mut file = DataFile::new(
                ["energy", "dim", "classification"].iter().map(|s| s.to_string()).collect(),
            );
            file.comment(format!("generic_dim = {}", scan.generic_dim));
            for (e, d) in &scan.drops {
                file.comment(format!("drop: energy = {e}, dim = {d}"));
            }
            file.comment("drops between grid points are not excluded by the scan".to_string());
            let mut table = Table::new(&["energy", "dim"]);
            for p in &scan.points {
                file.row(vec![fmt_f(p.energy), p.dim.to_string(), p.classification.to_string()]);
                table.push(vec![p.energy, p.dim as f64]);
            }
            let plot = config.plot.then_some((table, PlotKind::DimVsE));
            Ok((Output::Csv(file), plot))
        }
        Command::Ids => {
            let spec = config.model()?;
            let box_l = config.u64_req("box_l")? as i64;
            let samples = config.u64_req("samples")? as usize;
            let grid = config.grid("e_min", "e_max", "e_step")?;
            let curve = ids_estimate(&spec, box_l, samples, &grid, config.seed)?;
            let mut file = DataFile::new(
                ["energy", "f_hat", "stderr", "L", "samples"].iter().map(|s| s.to_string()).collect(),
            );
            let mut table = Table::new(&["energy", "f_hat", "stderr"]);
            for ((e, f), se) in curve.energies.iter().zip(&curve.f).zip(&curve.stderr) {
                file.row(vec![
                    fmt_f(*e),
                    fmt_f(*f),
                    fmt_f(*se),
                    box_l.to_string(),
                    samples.to_string(),
                ]);
                table.push(vec![*e, *f, *se]);
            }
            let plot = config.plot.then_some((table, PlotKind::Ids));
            Ok((Output::Csv(file), plot))
        }
        Command::Thouless => {
            let spec = config.model()?;
            let box_l = config.u64_req("box_l")? as i64;
            let samples = config.u64_req("samples")? as usize;
            let gamma_steps = config.u64_req("gamma_steps")? as usize;
            let eval = config.grid("eval_min", "eval_max", "eval_step")?;
            let ids_step = config.f64_req("ids_step")?;
            let margin = dirac_loc_core::spectrum::THOULESS_MARGIN;
            let lo = eval[0] - margin - ids_step;
            let hi = eval[eval.len() - 1] + margin + ids_step;
            let count = ((hi - lo) / ids_step).ceil() as usize;
            let ids_grid: Vec<f64> = (0..=count).map(|k| lo + k as f64 * ids_step).collect();

            let curve = ids_estimate(&spec, box_l, samples, &ids_grid, config.seed)?;
            let free: Vec<f64> =
                ids_grid.iter().map(|&e| spec.n as f64 * e / std::f64::consts::PI).collect();
            let gamma_curve: Vec<(f64, f64)> = eval
                .iter()
                .map(|&e| {
                    let est = lyapunov_spectrum(&spec, e, gamma_steps, config.seed, 1)?;
                    Ok((e, est.top_half_sum()))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let rep = thouless_residual(&gamma_curve, &curve, &free, &eval)?;
            let json = serde_json::json!({
                "a_fit": rep.a_fit,
                "max_residual": rep.max_residual,
                "truncation_bound": rep.truncation_bound,
                "eval_window": [rep.eval_window.0, rep.eval_window.1],
                "ids_window": [rep.ids_window.0, rep.ids_window.1],
                "box_l": box_l,
                "samples": samples,
                "gamma_steps": gamma_steps,
                "seed": config.seed,
            });
            let text = serde_json::to_string_pretty(&json).expect("json") + "\n";
            Ok((Output::Json(text), None))
        }
        Command::Green => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let sizes = config.i64_list_req("l_list")?;
            let samples = config.u64_req("samples")? as usize;
            let fit = green_decay_fit(&spec, energy, &sizes, samples, config.seed)?;
            let mut file = DataFile::new(
                ["L", "median_log_norm", "q25", "q75", "samples"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            file.comment(format!("slope = {}", fit.slope));
            file.comment(format!("slope_ci = {}", fit.ci));
            let mut table = Table::new(&["L", "median", "q25", "q75"]);
            for p in &fit.points {
                file.row(vec![
                    p.box_half_width.to_string(),
                    fmt_f(p.median_log_norm),
                    fmt_f(p.q25),
                    fmt_f(p.q75),
                    p.samples_used.to_string(),
                ]);
                table.push(vec![p.box_half_width as f64, p.median_log_norm, p.q25, p.q75]);
            }
            let plot = config.plot.then_some((table, PlotKind::Decay));
            Ok((Output::Csv(file), plot))
        }
        Command::Ildse => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let m = config.f64_req("m")?;
            let sizes = config.i64_list_req("l_list")?;
            let samples = config.u64_req("samples")? as usize;
            let mut file = DataFile::new(
                ["L", "m", "p_hat", "ci_lo", "ci_hi"].iter().map(|s| s.to_string()).collect(),
            );
            for &l in &sizes {
                let est = regularity_probability(&spec, energy, m, l, samples, config.seed)?;
                file.row(vec![
                    l.to_string(),
                    fmt_f(m),
                    fmt_f(est.p_hat),
                    fmt_f(est.ci.0),
                    fmt_f(est.ci.1),
                ]);
            }
            Ok((Output::Csv(file), None))
        }
        Command::Ldp => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let p = config.u64_req("p")? as usize;
            let sizes = config.i64_list_req("n_list")?;
            let samples = config.u64_req("samples")? as usize;
            let gamma_steps = config.u64_req("gamma_steps")? as usize;
            let gamma = lyapunov_spectrum(&spec, energy, gamma_steps, config.seed, 1)?;
            let eps = if let Ok(rel) = config.f64_req("eps_rel") {
                rel * gamma.gamma[p - 1].abs()
            } else {
                config.f64_req("eps")?
            };
            let frame = match config.str_or("frame", "none") {
                "none" => None,
                "fplus" => Some(LagrangianFrame::standard(FrameFlavor::FPlus, spec.n)?),
                "fminus" => Some(LagrangianFrame::standard(FrameFlavor::FMinus, spec.n)?),
                other => return Err(CliError::Config(format!("unknown frame '{other}'"))),
            };
            let mut file = DataFile::new(
                ["n", "p_hat", "ci_lo", "ci_hi", "samples"].iter().map(|s| s.to_string()).collect(),
            );
            file.comment(format!("eps = {eps}"));
            file.comment(format!("gamma_p = {}", gamma.gamma[p - 1]));
            for &n in &sizes {
                let est = ldp_probability(
                    &spec,
                    energy,
                    p,
                    eps,
                    n as usize,
                    samples,
                    frame.as_ref(),
                    &gamma.gamma,
                    config.seed,
                )?;
                file.row(vec![
                    n.to_string(),
                    fmt_f(est.p_hat),
                    fmt_f(est.ci.0),
                    fmt_f(est.ci.1),
                    samples.to_string(),
                ]);
            }
            Ok((Output::Csv(file), None))
        }
        Command::Wegner => {
            let spec = config.model()?;
            let energy = config.f64_req("energy")?;
            let sigma = config.f64_req("sigma")?;
            let beta = config.f64_req("beta")?;
            let sizes = config.i64_list_req("l_list")?;
            let samples = config.u64_req("samples")? as usize;
            let mut file = DataFile::new(
                ["L", "p_hat", "ci_lo", "ci_hi", "samples"].iter().map(|s| s.to_string()).collect(),
            );
            for &l in &sizes {
                let (p_hat, ci) =
                    wegner_probability(&spec, energy, l, sigma, beta, samples, config.seed)?;
                file.row(vec![
                    l.to_string(),
                    fmt_f(p_hat),
                    fmt_f(ci.0),
                    fmt_f(ci.1),
                    samples.to_string(),
                ]);
            }
            Ok((Output::Csv(file), None))
        }
        Command::GroupCheck => {
            let spec = config.model()?;
            let count = config.u64_or("count", 1000)? as usize;
            let e_lo = config.f64_or("e_min", -2.0)?;
            let e_hi = config.f64_or("e_max", 2.0)?;
            let mut symplectic_fail = 0usize;
            let mut orthogonal_pass = 0usize;
            let mut spo_pass = 0usize;
            let mut worst = 0.0_f64;
            for k in 0..count {
                let e = e_lo
                    + (e_hi - e_lo) * rng::unit_f64(rng::cell_channel_bits(config.seed, k as i64, 3));
                let mut omega = DVector::zeros(spec.n);
                for i in 0..spec.n {
                    let u = rng::unit_f64(rng::cell_channel_bits(config.seed, k as i64, 100 + i as u64));
                    omega[i] = spec.disorder[i].draw(u);
                }
                let t = spec.cell_transfer(&omega, e)?;
                let tol = 1e-8 * t.entries.norm().max(1.0);
                if !is_symplectic(&t.entries, tol)? {
                    symplectic_fail += 1;
                }
                let j = dirac_loc_core::matgroup::symplectic_form(spec.n);
                let res = (t.entries.transpose() * &j * &t.entries - &j).norm();
                worst = worst.max(res / t.entries.norm().max(1.0));
                if is_orthogonal(&t.entries, tol) {
                    orthogonal_pass += 1;
                }
                if is_spo(&t.entries, tol)? {
                    spo_pass += 1;
                }
            }
            let mut file = DataFile::new(
                ["count", "symplectic_failures", "orthogonal_members", "spo_members", "worst_rel_residual"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            file.row(vec![
                count.to_string(),
                symplectic_fail.to_string(),
                orthogonal_pass.to_string(),
                spo_pass.to_string(),
                fmt_f(worst),
            ]);
            Ok((Output::Csv(file), None))
        }
    }
}
