use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{apply_setting, ConfigFile};
use super::{BenchmarkArgs, CliError, FitArgs, SynthArgs, THREADS_ENV};
use crate::accounting::Method;
use crate::bench::{
    run_experiment, write_atomically, write_csv, write_json, BenchError, ExperimentOutcome, ExperimentPlan, RunRecord,
};
use crate::data::{load_dataset, synth_samples, write_libsvm, Dataset, Edge, SynthSpec};

impl From<super::ConfigError> for CliError {
    fn from(e: super::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn bench_error(e: BenchError) -> CliError {
    CliError::Config(e.to_string())
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Defaults, then the config file, then the flags given.
fn build_plan(
    lambda: f64,
    config: Option<&Path>,
    flags: &[(&str, Option<String>)],
) -> Result<ExperimentPlan, CliError> {
    let mut plan = ExperimentPlan::new(lambda);
    plan.threads = threads_from_env()?;
    if let Some(path) = config {
        ConfigFile::load(path)?.apply(&mut plan)?;
    }
    for (key, value) in flags {
        if let Some(v) = value {
            apply_setting(&mut plan, key, v)?;
        }
    }
    plan.validate().map_err(bench_error)?;
    Ok(plan)
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!("data file not found: {}", path.display())));
    }
    load_dataset(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn report(records: &[RunRecord]) {
    for r in records {
        eprintln!(
            "{:<5} passes {:>7.2}  objective {:.6e}  test_loss {:.6e}  violation {:.3e}",
            r.method.name(),
            r.effective_passes,
            r.objective,
            r.test_loss,
            r.constraint_violation
        );
    }
}

fn finish(outcome: &ExperimentOutcome) -> Result<(), CliError> {
    if outcome.aborted == 0 {
        return Ok(());
    }
    let errors: Vec<String> = outcome
        .summary
        .repeats
        .iter()
        .flat_map(|r| {
            r.methods.iter().filter_map(move |m| {
                m.error
                    .as_ref()
                    .map(|e| format!("repeat {} {}: {e}", r.repeat, m.method))
            })
        })
        .collect();
    Err(CliError::Abort(format!(
        "{} run(s) aborted: {}",
        outcome.aborted,
        errors.join("; ")
    )))
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|x| x.to_string())
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let method: Method = args.method.parse().map_err(CliError::Config)?;
    let flags = [
        ("methods", Some(method.name().to_string())),
        ("repeats", Some("1".to_string())),
        ("lambda", Some(args.lambda.to_string())),
        ("seed", opt(&args.seed)),
        ("passes", opt(&args.passes)),
        ("mu", opt(&args.mu)),
        ("strong", args.strong.then(|| "true".to_string())),
    ];
    let plan = build_plan(args.lambda, args.config.as_deref(), &flags)?;
    let dataset = load(&args.data)?;
    eprintln!(
        "fit: {} on {} ({} samples, {} features), lambda = {}",
        method,
        dataset.name,
        dataset.samples.len(),
        dataset.samples.n_features(),
        plan.lambda
    );
    let outcome = run_experiment(&dataset, &plan).map_err(bench_error)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-{}.csv", dataset.name, method.name())));
    write_csv(&outcome.records, &out).map_err(bench_error)?;
    write_json(&out.with_extension("json"), &outcome.summary).map_err(bench_error)?;
    report(&outcome.records);
    eprintln!("wrote {}", out.display());
    finish(&outcome)
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let flags = [
        ("methods", args.methods.clone()),
        ("repeats", opt(&args.repeats)),
        ("passes", opt(&args.passes)),
        ("seed", opt(&args.seed)),
        ("lambda", opt(&args.lambda)),
        ("mu", opt(&args.mu)),
        ("strong", args.strong.then(|| "true".to_string())),
        ("reference", args.reference.then(|| "true".to_string())),
    ];
    let plan = build_plan(1e-5, args.config.as_deref(), &flags)?;
    let dataset = load(&args.data)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Config(format!("{}: {e}", args.out_dir.display())))?;
    eprintln!(
        "benchmark: {} on {} ({} samples, {} features), {} repeats, {} passes",
        plan.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
        dataset.name,
        dataset.samples.len(),
        dataset.samples.n_features(),
        plan.repeats,
        plan.passes
    );
    let outcome = run_experiment(&dataset, &plan).map_err(bench_error)?;
    for &m in &plan.methods {
        let rows: Vec<RunRecord> = outcome.records.iter().filter(|r| r.method == m).cloned().collect();
        write_csv(&rows, &args.out_dir.join(format!("{}.csv", m.name()))).map_err(bench_error)?;
    }
    write_csv(&outcome.mean, &args.out_dir.join("mean.csv")).map_err(bench_error)?;
    write_json(&args.out_dir.join("summary.json"), &outcome.summary).map_err(bench_error)?;
    report(&outcome.mean);
    eprintln!("wrote {}", args.out_dir.display());
    finish(&outcome)
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    p: usize,
    n: usize,
    seed: u64,
    noise: f64,
    feature_scale: f64,
    edges: &'a [Edge],
    planted_x: &'a [f64],
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.p == 0 || args.n == 0 {
        return Err(CliError::Config(format!(
            "--p and --n must be at least 1 (got p = {}, n = {})",
            args.p, args.n
        )));
    }
    if !(args.noise >= 0.0) || !(args.feature_scale > 0.0) {
        return Err(CliError::Config("--noise must be >= 0 and --feature-scale > 0".into()));
    }
    let max_edges = args.p * (args.p - 1) / 2;
    if args.edges > max_edges {
        return Err(CliError::Config(format!(
            "--edges {} exceeds the {max_edges} possible edges for p = {}",
            args.edges, args.p
        )));
    }
    let spec = SynthSpec {
        noise: args.noise,
        feature_scale: args.feature_scale,
        ..SynthSpec::new(args.p, args.n, args.edges, args.seed)
    };
    let (samples, planted) = synth_samples(spec.p, spec.n, &spec.edges, spec.noise, spec.feature_scale, spec.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_atomically(&args.out, |w| write_libsvm(w, &samples)).map_err(bench_error)?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".json");
    let sidecar = PathBuf::from(sidecar);
    let body = SynthSidecar {
        p: args.p,
        n: args.n,
        seed: args.seed,
        noise: args.noise,
        feature_scale: args.feature_scale,
        edges: &spec.edges,
        planted_x: &planted,
    };
    write_json(&sidecar, &body).map_err(bench_error)?;
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "wrote {} and {}", args.out.display(), sidecar.display());
    Ok(())
}
