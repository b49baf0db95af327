//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Every key is checked against a typed schema; unknown keys are errors.
//! Values are applied in the order default, file, command-line flag.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::accounting::Method;
use crate::bench::ExperimentPlan;
use crate::exec::Exec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: invalid value '{value}' (expected {expected})")]
    Value {
        key: String,
        value: String,
        expected: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    PositiveReal,
    NonNegativeReal,
    Fraction,
    PositiveCount,
    Seed,
    Flag,
    Methods,
    Loss,
    ExecPolicy,
    RealList,
}

impl Kind {
    fn expected(self) -> &'static str {
        match self {
            Kind::PositiveReal => "a positive real",
            Kind::NonNegativeReal => "a non-negative real",
            Kind::Fraction => "a real in (0, 1)",
            Kind::PositiveCount => "a positive integer",
            Kind::Seed => "a non-negative integer",
            Kind::Flag => "true or false",
            Kind::Methods => "a comma-separated list of batch, stoc, sa, scas",
            Kind::Loss => "logistic or squared",
            Kind::ExecPolicy => "parallel or sequential",
            Kind::RealList => "a comma-separated list of positive reals",
        }
    }
}

/// Every accepted key and its value type.
pub const KEYS: [(&str, &str); 25] = [
    ("methods", "comma-separated methods"),
    ("repeats", "number of random splits"),
    ("passes", "effective-pass budget"),
    ("lambda", "L1 strength"),
    ("loss", "logistic or squared"),
    ("mu", "L2 strength"),
    ("strong", "strongly convex SCAS variant"),
    ("eta_grid", "step-size candidates"),
    ("rho_grid", "penalty candidates"),
    ("eta", "fixed step size"),
    ("rho", "fixed penalty"),
    ("grid_subset_size", "samples used for tuning"),
    ("grid_passes_stochastic", "tuning budget, stochastic methods"),
    ("grid_passes_batch", "tuning budget, batch ADMM"),
    ("seed", "base seed"),
    ("train_fraction", "training share of each split"),
    ("graph_threshold", "correlation threshold for graph edges"),
    ("scas_inner_length", "SCAS inner-loop length M"),
    ("batch_inner_tol", "batch inner gradient tolerance"),
    ("batch_inner_max_iters", "batch inner iteration cap"),
    ("cg_tol", "conjugate gradient tolerance"),
    ("cg_max_iters", "conjugate gradient iteration cap"),
    ("reference", "compute a reference optimum per repeat"),
    ("exec", "parallel or sequential evaluation"),
    ("threads", "worker-thread cap"),
];

fn kind_of(key: &str) -> Option<Kind> {
    Some(match key {
        "methods" => Kind::Methods,
        "repeats" | "grid_subset_size" | "scas_inner_length" | "batch_inner_max_iters" | "cg_max_iters" | "threads" => {
            Kind::PositiveCount
        }
        "passes" | "eta" | "rho" | "grid_passes_stochastic" | "grid_passes_batch" | "batch_inner_tol" | "cg_tol" => {
            Kind::PositiveReal
        }
        "lambda" | "mu" => Kind::NonNegativeReal,
        "train_fraction" => Kind::Fraction,
        "graph_threshold" => Kind::NonNegativeReal,
        "seed" => Kind::Seed,
        "strong" | "reference" => Kind::Flag,
        "loss" => Kind::Loss,
        "exec" => Kind::ExecPolicy,
        "eta_grid" | "rho_grid" => Kind::RealList,
        _ => return None,
    })
}

/// A parsed file: `(line, key, value)` in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<(usize, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', found '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key or value".into(),
                });
            }
            if kind_of(key).is_none() {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if entries.iter().any(|(_, k, _)| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            entries.push((line, key.into(), value.into()));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn apply(&self, plan: &mut ExperimentPlan) -> Result<(), ConfigError> {
        for (_, key, value) in &self.entries {
            apply_setting(plan, key, value)?;
        }
        Ok(())
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Validates `value` against the schema entry of `key` and stores it in `plan`.
pub fn apply_setting(plan: &mut ExperimentPlan, key: &str, value: &str) -> Result<(), ConfigError> {
    let kind = kind_of(key).ok_or_else(|| ConfigError::UnknownKey {
        line: 0,
        key: key.into(),
    })?;
    let invalid = || ConfigError::Value {
        key: key.into(),
        value: value.into(),
        expected: kind.expected(),
    };
    let real = || parse_real(value).ok_or_else(invalid);
    let positive = || real().and_then(|v| if v > 0.0 { Ok(v) } else { Err(invalid()) });
    let non_negative = || real().and_then(|v| if v >= 0.0 { Ok(v) } else { Err(invalid()) });
    let count = || value.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(invalid);
    let flag = || match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid()),
    };
    let list = || -> Result<Vec<f64>, ConfigError> {
        value
            .split(',')
            .map(|t| parse_real(t.trim()).filter(|&v| v > 0.0).ok_or_else(invalid))
            .collect()
    };
    match key {
        "methods" => {
            let methods: Vec<Method> = value
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| invalid()))
                .collect::<Result<_, _>>()?;
            plan.methods = methods;
        }
        "repeats" => plan.repeats = count()?,
        "passes" => plan.passes = positive()?,
        "lambda" => plan.lambda = non_negative()?,
        "loss" => plan.loss = value.parse().map_err(|_| invalid())?,
        "mu" => plan.mu = non_negative()?,
        "strong" => plan.strong = flag()?,
        "eta_grid" => plan.eta_grid = list()?,
        "rho_grid" => plan.rho_grid = list()?,
        "eta" => plan.eta = Some(positive()?),
        "rho" => plan.rho = Some(positive()?),
        "grid_subset_size" => plan.grid_subset_size = count()?,
        "grid_passes_stochastic" => plan.grid_passes_stochastic = positive()?,
        "grid_passes_batch" => plan.grid_passes_batch = positive()?,
        "seed" => plan.seed = value.parse().map_err(|_| invalid())?,
        "train_fraction" => {
            let f = real()?;
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid());
            }
            plan.train_fraction = f;
        }
        "graph_threshold" => plan.graph_threshold = non_negative()?,
        "scas_inner_length" => plan.scas_inner_length = Some(count()?),
        "batch_inner_tol" => plan.batch_inner_tol = positive()?,
        "batch_inner_max_iters" => plan.batch_inner_max_iters = count()?,
        "cg_tol" => plan.cg_tol = positive()?,
        "cg_max_iters" => plan.cg_max_iters = count()?,
        "reference" => plan.compute_reference = flag()?,
        "exec" => {
            plan.exec = match value {
                "parallel" => Exec::Parallel,
                "sequential" => Exec::Sequential,
                _ => return Err(invalid()),
            }
        }
        "threads" => plan.threads = Some(count()?),
        _ => return Err(invalid()),
    }
    Ok(())
}
