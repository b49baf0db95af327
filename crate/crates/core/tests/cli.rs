use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use scas_admm::bench::read_csv;
use scas_admm::data::load_dataset;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scas-admm"));
    cmd.env_remove("SCAS_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, name: &str, p: usize, n: usize, edges: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let out = run(bin()
        .args(["synth", "--p", &p.to_string(), "--n", &n.to_string()])
        .args([
            "--edges",
            &edges.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            path.to_str().unwrap(),
        ]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_writes_parseable_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.txt", 5, 20, 3, 11);
    let b = synth(dir.path(), "b.txt", 5, 20, 3, 11);
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(text.iter().filter(|&&c| c == b'\n').count(), 20);
    let data = load_dataset(&a).unwrap();
    assert_eq!(data.samples.len(), 20);
    let sidecar = json(&dir.path().join("a.txt.json"));
    assert_eq!(sidecar["planted_x"].as_array().unwrap().len(), 5);
    assert_eq!(sidecar["edges"].as_array().unwrap().len(), 3);
    assert_eq!(sidecar, json(&dir.path().join("b.txt.json")));

    let c = synth(dir.path(), "c.txt", 5, 20, 3, 12);
    assert_ne!(std::fs::read(&c).unwrap(), text);
    synth(dir.path(), "d.txt", 5, 20, 0, 11);
    assert!(json(&dir.path().join("d.txt.json"))["edges"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn synth_rejects_impossible_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["synth", "--p", "3", "--n", "5", "--edges", "4", "--out"])
        .arg(dir.path().join("x.txt")));
    assert_eq!(code(&out), 2);
}

#[test]
fn fit_validates_method_and_data_path() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 4, 30, 1, 1);
    let out = run(bin()
        .args(["fit", "--method", "sgd", "--lambda", "1e-5", "--data"])
        .arg(&data));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("batch, stoc, sa, scas"), "{}", stderr(&out));

    let missing = dir.path().join("nope.txt");
    let out = run(bin()
        .args(["fit", "--method", "scas", "--lambda", "1e-5", "--data"])
        .arg(&missing));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope.txt"));

    let out = run(bin().args(["fit", "--method", "scas", "--data"]).arg(&data));
    assert_eq!(code(&out), 2, "missing --lambda is a usage error");
}

#[test]
fn fit_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 4, 40, 1, 2);
    let csv = dir.path().join("fit.csv");
    let out = run(bin()
        .args([
            "fit", "--method", "scas", "--lambda", "1e-5", "--passes", "4", "--seed", "3", "--data",
        ])
        .arg(&data)
        .arg("--out")
        .arg(&csv));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let records = read_csv(&csv).unwrap();
    let passes: Vec<f64> = records.iter().map(|r| r.effective_passes).collect();
    assert_eq!(passes, vec![2.0, 4.0]);
    let summary = json(&dir.path().join("fit.json"));
    assert_eq!(summary["plan"]["lambda"], 1e-5);
    assert_eq!(summary["plan"]["seed"], 3);
}

#[test]
fn settings_follow_flag_then_file_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 4, 40, 1, 3);
    let config = write(
        dir.path(),
        "run.cfg",
        "# overrides\npasses = 3\nseed = 9\n\nrepeats=1\n",
    );
    let plan_of = |extra: &[&str], cfg: Option<&Path>| {
        let out_dir = tempfile::tempdir_in(dir.path()).unwrap();
        let mut cmd = bin();
        cmd.args(["benchmark", "--methods", "stoc", "--data"])
            .arg(&data)
            .arg("--out-dir")
            .arg(out_dir.path())
            .args(extra);
        if let Some(c) = cfg {
            cmd.arg("--config").arg(c);
        }
        let out = run(&mut cmd);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        json(&out_dir.path().join("summary.json"))["plan"].clone()
    };
    let plan = plan_of(&["--passes", "2"], Some(&config));
    assert_eq!((plan["passes"].as_f64(), plan["seed"].as_u64()), (Some(2.0), Some(9)));
    let plan = plan_of(&[], Some(&config));
    assert_eq!((plan["passes"].as_f64(), plan["seed"].as_u64()), (Some(3.0), Some(9)));
    let plan = plan_of(&["--repeats", "1", "--passes", "1"], None);
    assert_eq!((plan["seed"].as_u64(), plan["lambda"].as_f64()), (Some(0), Some(1e-5)));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 4, 20, 1, 4);
    for text in ["pases = 3\n", "passes = -1\n", "passes 3\n", "passes = 3\npasses = 4\n"] {
        let config = write(dir.path(), "bad.cfg", text);
        let out = run(bin()
            .args(["benchmark", "--data"])
            .arg(&data)
            .arg("--out-dir")
            .arg(dir.path().join("out"))
            .arg("--config")
            .arg(&config));
        assert_eq!(code(&out), 2, "{text:?}: {}", stderr(&out));
    }
}

#[test]
fn benchmark_smoke_run_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 5, 60, 2, 5);
    let out_dir = dir.path().join("out");
    let start = Instant::now();
    let out = run(bin()
        .args([
            "benchmark",
            "--methods",
            "batch,stoc,sa,scas",
            "--repeats",
            "1",
            "--passes",
            "2",
            "--data",
        ])
        .arg(&data)
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(start.elapsed() < Duration::from_secs(5));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for m in ["batch", "stoc", "sa", "scas", "mean"] {
        assert!(!read_csv(&out_dir.join(format!("{m}.csv"))).unwrap().is_empty(), "{m}");
    }
    assert_eq!(
        json(&out_dir.join("summary.json"))["repeats"].as_array().unwrap().len(),
        1
    );
}

#[test]
fn strong_flag_selects_the_strongly_convex_variant() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 5, 60, 2, 6);
    let out_dir = dir.path().join("out");
    let out = run(bin()
        .args([
            "benchmark",
            "--methods",
            "scas",
            "--strong",
            "--mu",
            "1e-3",
            "--repeats",
            "1",
            "--passes",
            "4",
            "--data",
        ])
        .arg(&data)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["plan"]["strong"], true);
    assert_eq!(summary["plan"]["mu"], 1e-3);
    let method = &summary["repeats"][0]["methods"][0];
    assert!(method["validation"]["conditions"].as_array().unwrap().len() == 3);

    let out = run(bin()
        .args(["benchmark", "--methods", "scas", "--strong", "--repeats", "1", "--data"])
        .arg(&data)
        .arg("--out-dir")
        .arg(&out_dir));
    assert_eq!(code(&out), 2, "strong without mu is a configuration error");
}

#[test]
fn diverging_solver_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 5, 40, 0, 7);
    let config = write(dir.path(), "div.cfg", "loss = squared\neta = 1e6\nrho = 1e-3\n");
    let out_dir = dir.path().join("out");
    let out = run(bin()
        .args([
            "benchmark",
            "--methods",
            "stoc",
            "--repeats",
            "1",
            "--passes",
            "5",
            "--data",
        ])
        .arg(&data)
        .arg("--out-dir")
        .arg(&out_dir)
        .arg("--config")
        .arg(&config));
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let summary = json(&out_dir.join("summary.json"));
    assert!(summary["repeats"][0]["methods"][0]["error"].is_string());
}

#[test]
fn thread_cap_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.txt", 4, 30, 1, 8);
    let bench = |threads: &str, out_dir: &Path| {
        run(bin()
            .env("SCAS_THREADS", threads)
            .args([
                "benchmark",
                "--methods",
                "scas,stoc",
                "--repeats",
                "2",
                "--passes",
                "2",
                "--data",
            ])
            .arg(&data)
            .arg("--out-dir")
            .arg(out_dir))
    };
    let one = dir.path().join("one");
    let out = bench("1", &one);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&one.join("summary.json"))["plan"]["threads"], 1);
    let four = dir.path().join("four");
    assert_eq!(code(&bench("4", &four)), 0);
    let strip = |p: &Path| {
        read_csv(&p.join("mean.csv"))
            .unwrap()
            .into_iter()
            .map(|r| (r.method, r.effective_passes, r.objective.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&one), strip(&four));
    assert_eq!(code(&bench("zero", &dir.path().join("bad"))), 2);
}
