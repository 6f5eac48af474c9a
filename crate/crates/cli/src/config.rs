//! Experiment configuration: a flat key = value file (# comments allowed)
//! or a JSON object with identical keys. Unknown keys are rejected so typos
//! fail loudly instead of silently running a default.

use std::collections::BTreeMap;
use std::path::Path;

use dirac_loc_core::matgroup::coupling_delta;
use dirac_loc_core::model::{case_coefficients, DisorderLaw, ModelSpec, OperatorKind};
use nalgebra::DMatrix;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Lyapunov,
    Scan,
    Lie,
    Threshold,
    Critical,
    Ids,
    Thouless,
    Green,
    Ildse,
    Ldp,
    Wegner,
    GroupCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lyapunov => "lyapunov",
            Command::Scan => "scan",
            Command::Lie => "lie",
            Command::Threshold => "threshold",
            Command::Critical => "critical",
            Command::Ids => "ids",
            Command::Thouless => "thouless",
            Command::Green => "green",
            Command::Ildse => "ildse",
            Command::Ldp => "ldp",
            Command::Wegner => "wegner",
            Command::GroupCheck => "group-check",
        }
    }

    pub fn from_name(s: &str) -> Option<Command> {
        [
            Command::Lyapunov,
            Command::Scan,
            Command::Lie,
            Command::Threshold,
            Command::Critical,
            Command::Ids,
            Command::Thouless,
            Command::Green,
            Command::Ildse,
            Command::Ldp,
            Command::Wegner,
            Command::GroupCheck,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    /// Command-specific keys accepted in the configuration.
    fn extra_keys(&self) -> &'static [&'static str] {
        match self {
            Command::Lyapunov => &["energy", "steps", "reorth"],
            Command::Scan => &["e_min", "e_max", "e_step", "steps", "reorth"],
            Command::Lie => &["energy", "tol", "max_dim"],
            Command::Threshold => &["d_log_o"],
            Command::Critical => &["e_min", "e_max", "e_step", "tol"],
            Command::Ids => &["box_l", "samples", "e_min", "e_max", "e_step"],
            Command::Thouless => &[
                "box_l", "samples", "eval_min", "eval_max", "eval_step", "ids_step", "gamma_steps",
            ],
            Command::Green => &["energy", "l_list", "samples"],
            Command::Ildse => &["energy", "m", "l_list", "samples"],
            Command::Ldp => &[
                "energy", "p", "eps", "eps_rel", "n_list", "samples", "gamma_steps", "frame",
            ],
            Command::Wegner => &["energy", "l_list", "sigma", "beta", "samples"],
            Command::GroupCheck => &["count", "e_min", "e_max"],
        }
    }
}

const MODEL_KEYS: &[&str] = &[
    "n", "ell", "case", "alpha0", "alpha1", "alpha2", "alpha3", "beta0", "beta1", "beta2",
    "beta3", "vper", "disorder", "kind",
];
const GLOBAL_KEYS: &[&str] = &["command", "seed", "workers", "output_path", "plot"];

/// Parsed configuration: the raw key map plus the resolved globals.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub workers: usize,
    pub output_path: String,
    pub plot: bool,
    keys: BTreeMap<String, String>,
}

fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

fn parse_json(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Config("JSON config must be a flat object".into()))?;
    let mut map = BTreeMap::new();
    for (k, v) in obj {
        let s = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            _ => return Err(CliError::Config(format!("key '{k}' must be scalar"))),
        };
        map.insert(k.clone(), s);
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn load(path: &Path, command: Command, seed_override: Option<u64>, out_override: Option<String>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let keys = if text.trim_start().starts_with('{') {
            parse_json(&text)?
        } else {
            parse_flat(&text)?
        };
        Self::from_map(keys, command, seed_override, out_override)
    }

    pub fn from_map(
        keys: BTreeMap<String, String>,
        command: Command,
        seed_override: Option<u64>,
        out_override: Option<String>,
    ) -> Result<Self, CliError> {
        if let Some(c) = keys.get("command") {
            if Command::from_name(c) != Some(command) {
                return Err(CliError::Config(format!(
                    "config names command '{c}' but '{}' was invoked",
                    command.name()
                )));
            }
        }
        for k in keys.keys() {
            let known = MODEL_KEYS.contains(&k.as_str())
                || GLOBAL_KEYS.contains(&k.as_str())
                || command.extra_keys().contains(&k.as_str());
            if !known {
                return Err(CliError::Config(format!(
                    "unknown key '{k}' for command '{}'",
                    command.name()
                )));
            }
        }
        let mut cfg = ExperimentConfig {
            command,
            seed: 0,
            workers: 1,
            output_path: ".".into(),
            plot: false,
            keys,
        };
        cfg.seed = seed_override.unwrap_or(cfg.u64_or("seed", 1)?);
        cfg.workers = cfg.u64_or("workers", 1)? as usize;
        if let Ok(env_workers) = std::env::var("DIRACLOC_WORKERS") {
            cfg.workers = env_workers
                .parse()
                .map_err(|_| CliError::Config("DIRACLOC_WORKERS must be an integer".into()))?;
        }
        if cfg.workers == 0 {
            return Err(CliError::Config("workers must be positive".into()));
        }
        cfg.output_path = out_override.unwrap_or_else(|| {
            cfg.keys.get("output_path").cloned().unwrap_or_else(|| ".".into())
        });
        cfg.plot = cfg.bool_or("plot", false)?;
        Ok(cfg)
    }

    pub fn raw(&self) -> &BTreeMap<String, String> {
        &self.keys
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(|s| s.as_str())
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing key '{key}'")))?
            .parse()
            .map_err(|_| CliError::Config(format!("key '{key}' must be a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}' must be a number"))),
        }
    }

    pub fn u64_req(&self, key: &str) -> Result<u64, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing key '{key}'")))?
            .parse()
            .map_err(|_| CliError::Config(format!("key '{key}' must be a nonnegative integer")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}' must be a nonnegative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(CliError::Config(format!("key '{key}' must be a boolean, got '{v}'"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated integer list.
    pub fn i64_list_req(&self, key: &str) -> Result<Vec<i64>, CliError> {
        let raw = self
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing key '{key}'")))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("key '{key}': bad integer '{s}'")))
            })
            .collect()
    }

    /// Sorted grid from e_min / e_max / e_step style keys.
    pub fn grid(&self, min_key: &str, max_key: &str, step_key: &str) -> Result<Vec<f64>, CliError> {
        let lo = self.f64_req(min_key)?;
        let hi = self.f64_req(max_key)?;
        let step = self.f64_req(step_key)?;
        if !(step > 0.0) || hi < lo {
            return Err(CliError::Config(format!(
                "grid needs {min_key} <= {max_key} and positive {step_key}"
            )));
        }
        let count = ((hi - lo) / step).round() as usize;
        Ok((0..=count).map(|k| lo + k as f64 * step).collect())
    }

    /// Build the model described by the config's model keys.
    pub fn model(&self) -> Result<ModelSpec, CliError> {
        let n = self.u64_req("n")? as usize;
        let ell = self.f64_req("ell")?;
        if n == 0 || !(ell > 0.0) {
            return Err(CliError::Config("need n >= 1 and ell > 0".into()));
        }
        let kind = match self.str_or("kind", "dirac") {
            "dirac" => OperatorKind::Dirac,
            "schrodinger" => OperatorKind::Schrodinger,
            other => return Err(CliError::Config(format!("unknown kind '{other}'"))),
        };

        let (mut alpha, mut beta) = ([0.0; 4], [0.0; 4]);
        if let Some(case) = self.get("case") {
            let case_id: usize = case
                .parse()
                .map_err(|_| CliError::Config("case must be 1..=5".into()))?;
            let (a, b) = case_coefficients(case_id).map_err(CliError::Run)?;
            alpha = a;
            beta = b;
        }
        for (k, slot) in [("alpha0", 0), ("alpha1", 1), ("alpha2", 2), ("alpha3", 3)] {
            if self.get(k).is_some() {
                alpha[slot] = self.f64_req(k)?;
            }
        }
        for (k, slot) in [("beta0", 0), ("beta1", 1), ("beta2", 2), ("beta3", 3)] {
            if self.get(k).is_some() {
                beta[slot] = self.f64_req(k)?;
            }
        }

        let v_per = match self.str_or("vper", "delta") {
            "delta" => coupling_delta(n),
            "zero" => DMatrix::zeros(n, n),
            inline => {
                let vals: Result<Vec<f64>, _> =
                    inline.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let vals = vals
                    .map_err(|_| CliError::Config("vper must be 'delta', 'zero' or a row-major list".into()))?;
                if vals.len() != n * n {
                    return Err(CliError::Config(format!(
                        "vper needs {} entries for n = {n}",
                        n * n
                    )));
                }
                DMatrix::from_row_slice(n, n, &vals)
            }
        };

        let disorder_str = self.str_or("disorder", "bernoulli:0.5");
        let law = parse_disorder(disorder_str)?;

        let spec = match kind {
            OperatorKind::Dirac => {
                ModelSpec::dirac(n, ell, alpha, beta, v_per, vec![law; n]).map_err(CliError::Run)?
            }
            OperatorKind::Schrodinger => {
                ModelSpec::schrodinger(n, ell, v_per, vec![law; n]).map_err(CliError::Run)?
            }
        };
        Ok(spec)
    }
}

/// `bernoulli:p` or a `value:prob,value:prob,...` list.
fn parse_disorder(s: &str) -> Result<DisorderLaw, CliError> {
    if let Some(p) = s.strip_prefix("bernoulli:") {
        let p: f64 = p
            .parse()
            .map_err(|_| CliError::Config("bernoulli parameter must be a number".into()))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Config("bernoulli parameter must be in [0, 1]".into()));
        }
        return Ok(DisorderLaw::bernoulli(p));
    }
    let mut atoms = Vec::new();
    for part in s.split(',') {
        let (v, p) = part
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("disorder atom '{part}' must be value:prob")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad disorder value '{v}'")))?;
        let prob: f64 = p
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad disorder probability '{p}'")))?;
        atoms.push((value, prob));
    }
    let law = DisorderLaw { atoms };
    law.validate().map_err(CliError::Run)?;
    Ok(law)
}
