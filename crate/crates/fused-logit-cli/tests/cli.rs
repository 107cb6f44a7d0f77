//! End-to-end tests of the command line surface: file artifacts, exit
//! codes, and cross-command consistency, all through the real binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fused-logit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// Generates a small case-c instance (d=100, t=4) under `dir/name`.
fn simulate_small(dir: &TempDir, name: &str, n_train: usize, seed: u64) -> PathBuf {
    let out = dir.path().join(name);
    let run = run(&[
        "simulate",
        "--case",
        "c",
        "--n-train",
        &n_train.to_string(),
        "--n-val",
        "120",
        "--n-test",
        "120",
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    out
}

/// Drops the trailing wall-time column from every CSV line.
fn strip_wall_ms(report: &str) -> String {
    report
        .lines()
        .map(|line| &line[..line.rfind(',').expect("has columns")])
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn simulate_is_deterministic_and_prints_the_manifest_path() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut first = None;
    for out in [&a, &b] {
        let run = run(&[
            "simulate",
            "--case",
            "c",
            "--scenario",
            "independent",
            "--n-train",
            "40",
            "--n-val",
            "50",
            "--n-test",
            "50",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
        first.get_or_insert(stdout(&run));
    }
    assert_eq!(
        first.unwrap().trim(),
        a.join("instance.json").to_str().unwrap()
    );
    for name in ["instance.json", "train.csv", "val.csv", "test.csv"] {
        let lhs = fs::read(a.join(name)).unwrap();
        let rhs = fs::read(b.join(name)).unwrap();
        assert!(!lhs.is_empty());
        assert_eq!(lhs, rhs, "{name} differs between identical runs");
    }
}

#[test]
fn simulate_rejects_unknown_case_and_wrong_scenario() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "simulate",
        "--case",
        "z",
        "--n-train",
        "10",
        "--seed",
        "1",
        "--out",
        &path_str(&dir, "x"),
    ]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("case label"));

    let out = run(&[
        "simulate",
        "--case",
        "c",
        "--scenario",
        "correlated",
        "--n-train",
        "10",
        "--seed",
        "1",
        "--out",
        &path_str(&dir, "x"),
    ]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("independent"));
}

#[test]
fn fit_writes_model_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let inst = simulate_small(&dir, "inst", 40, 11);
    let model = dir.path().join("model.csv");
    let out = run(&[
        "fit",
        "--train",
        inst.join("train.csv").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--lambda1",
        "0.4",
        "--lambda2",
        "0.1",
        "--nu",
        "0.2",
    ]);
    assert_code(&out, 0);
    assert!(stdout(&out).contains("outer iterations"));

    let text = fs::read_to_string(&model).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 101, "1 intercept row plus d=100");
    for row in rows {
        assert_eq!(row.split(',').count(), 4, "one column per task");
    }
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(sidecar["converged"], serde_json::Value::Bool(true));
    assert!(sidecar["iterations"].as_u64().unwrap() >= 1);
    assert_eq!(
        sidecar["objective_trace"].as_array().unwrap().len(),
        sidecar["iterations"].as_u64().unwrap() as usize
    );
}

#[test]
fn fit_iteration_cap_exits_two_but_still_writes_the_model() {
    let dir = TempDir::new().unwrap();
    let inst = simulate_small(&dir, "inst", 40, 11);
    let model = dir.path().join("model.csv");
    let out = run(&[
        "fit",
        "--train",
        inst.join("train.csv").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--lambda1",
        "0.4",
        "--nu",
        "0.2",
        "--max-outer",
        "1",
    ]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("iteration cap"));
    assert!(model.is_file(), "non-convergence still writes the model");
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(sidecar["converged"], serde_json::Value::Bool(false));
}

#[test]
fn fit_missing_train_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "fit",
        "--train",
        &path_str(&dir, "missing.csv"),
        "--out",
        &path_str(&dir, "m.csv"),
    ]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn fusion_weight_is_inert_with_a_single_task() {
    let dir = TempDir::new().unwrap();
    let train = dir.path().join("train.csv");
    let mut csv = String::from("x1,x2,y1\n");
    let rows = [
        (0.5, 1.2, 1),
        (-0.3, 0.8, -1),
        (1.7, -0.2, 1),
        (-1.1, -0.9, -1),
        (0.2, 0.1, 1),
        (-0.6, 1.5, -1),
        (2.0, -1.3, 1),
        (-1.4, 0.4, -1),
    ];
    for (a, b, y) in rows {
        csv.push_str(&format!("{a},{b},{y}\n"));
    }
    fs::write(&train, csv).unwrap();

    let fit_with_nu = |nu: &str, name: &str| -> Vec<u8> {
        let model = dir.path().join(name);
        let out = run(&[
            "fit",
            "--train",
            train.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--lambda1",
            "0.3",
            "--lambda2",
            "0.2",
            "--nu",
            nu,
        ]);
        assert_code(&out, 0);
        fs::read(model).unwrap()
    };
    assert_eq!(
        fit_with_nu("0", "m0.csv"),
        fit_with_nu("7", "m7.csv"),
        "with one task there are no neighbor differences to penalize"
    );
}

#[test]
fn tune_singleton_grid_reports_exactly_those_values() {
    let dir = TempDir::new().unwrap();
    let inst = simulate_small(&dir, "inst", 40, 13);
    let best = dir.path().join("best.json");
    let model = dir.path().join("best_model.csv");
    let out = run(&[
        "tune",
        "--train",
        inst.join("train.csv").to_str().unwrap(),
        "--val",
        inst.join("val.csv").to_str().unwrap(),
        "--out",
        best.to_str().unwrap(),
        "--model-out",
        model.to_str().unwrap(),
        "--lambda1-grid",
        "0.8",
        "--lambda2-grid",
        "0.1",
        "--nu-grid",
        "0.2",
    ]);
    assert_code(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&best).unwrap()).unwrap();
    assert_eq!(report["variant"], "fused_elastic_net");
    assert_eq!(report["lambda1"].as_f64(), Some(0.8));
    assert_eq!(report["lambda2"].as_f64(), Some(0.1));
    assert_eq!(report["nu"].as_f64(), Some(0.2));
    assert_eq!(report["fits_evaluated"].as_u64(), Some(1));
    let err = report["validation_error"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&err));
    assert_eq!(fs::read_to_string(model).unwrap().lines().count(), 101);
}

/// Reads one named column out of a single-data-row report CSV.
fn csv_cell(report: &str, column: &str) -> String {
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == column)
        .unwrap_or_else(|| panic!("no column {column}"));
    lines.next().unwrap().split(',').nth(idx).unwrap().to_string()
}

#[test]
fn benchmark_filters_cases_and_evaluate_reproduces_its_bayes_estimate() {
    let dir = TempDir::new().unwrap();
    let bench = dir.path().join("bench");
    let out = run(&[
        "benchmark",
        "--out-dir",
        bench.to_str().unwrap(),
        "--cases",
        "c",
        "--train-sizes",
        "25",
        "--instances",
        "1",
        "--variants",
        "unpenalized",
        "--seed",
        "3",
        "--n-val",
        "120",
        "--n-test",
        "120",
    ]);
    assert_code(&out, 0);
    let report = fs::read_to_string(bench.join("report.csv")).unwrap();
    let data_rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(data_rows.len(), 1, "1 case x 1 size x 1 instance x 1 model");
    assert!(data_rows.iter().all(|r| r.starts_with("c,")));
    assert!(bench.join("report.json").is_file());
    assert!(bench.join("plot.csv").is_file());

    // The reported per-instance seed reconstructs the exact instance, so
    // scoring its true coefficients by hand must reproduce the benchmark's
    // Bayes estimate.
    let seed = csv_cell(&report, "seed");
    let bayes: f64 = csv_cell(&report, "bayes_estimate").parse().unwrap();
    let inst = dir.path().join("inst");
    let sim = run(&[
        "simulate",
        "--case",
        "c",
        "--n-train",
        "25",
        "--n-val",
        "120",
        "--n-test",
        "120",
        "--seed",
        &seed,
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_code(&sim, 0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(inst.join("instance.json")).unwrap()).unwrap();
    let truth = dir.path().join("truth.csv");
    let mut text = String::new();
    for row in manifest["b_true"].as_array().unwrap() {
        let cells: Vec<String> = row
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap().to_string())
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(&truth, text).unwrap();

    let eval_path = dir.path().join("eval.json");
    let eval = run(&[
        "evaluate",
        "--model",
        truth.to_str().unwrap(),
        "--data",
        inst.join("test.csv").to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out",
        eval_path.to_str().unwrap(),
    ]);
    assert_code(&eval, 0);
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&eval_path).unwrap()).unwrap();
    assert_eq!(metrics["l01_error"].as_f64(), Some(bayes));
    assert_eq!(metrics["zero_part"].as_f64(), Some(0.0));
    assert_eq!(metrics["nonzero_part"].as_f64(), Some(0.0));
}

#[test]
fn benchmark_without_any_seed_fails_fast() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "benchmark",
        "--out-dir",
        &path_str(&dir, "bench"),
        "--cases",
        "c",
        "--train-sizes",
        "25",
        "--instances",
        "1",
        "--variants",
        "unpenalized",
    ]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("base seed"));
}

#[test]
fn benchmark_config_errors_name_the_offending_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    let args = |cfg: &Path, dir: &TempDir| {
        vec![
            "benchmark".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out-dir".into(),
            path_str(dir, "bench"),
        ]
    };

    fs::write(&cfg, r#"{"cases": 5, "base_seed": 1}"#).unwrap();
    let out = bin().args(args(&cfg, &dir)).output().unwrap();
    assert_code(&out, 1);
    assert!(stderr(&out).contains("cases"), "stderr: {}", stderr(&out));

    fs::write(&cfg, r#"{"casez": [], "base_seed": 1}"#).unwrap();
    let out = bin().args(args(&cfg, &dir)).output().unwrap();
    assert_code(&out, 1);
    assert!(stderr(&out).contains("unknown field"));

    fs::write(&cfg, "{").unwrap();
    let out = bin().args(args(&cfg, &dir)).output().unwrap();
    assert_code(&out, 1);
    assert!(stderr(&out).contains("parsing"));
}

#[test]
fn benchmark_config_base_seed_replaces_the_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
            "cases": ["c"],
            "train_sizes": [25],
            "instances_per_case": 1,
            "variants": ["unpenalized"],
            "base_seed": 3,
            "n_val": 120,
            "n_test": 120
        }"#,
    )
    .unwrap();
    let bench = dir.path().join("bench");
    let out = run(&[
        "benchmark",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        bench.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report = fs::read_to_string(bench.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);
    assert_eq!(csv_cell(&report, "seed"), "2003", "base 3 + 1000 * case index");
}

#[test]
fn thread_count_does_not_change_benchmark_results() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for (threads, name) in [("1", "one"), ("2", "two")] {
        let bench = dir.path().join(name);
        let out = run(&[
            "benchmark",
            "--threads",
            threads,
            "--out-dir",
            bench.to_str().unwrap(),
            "--cases",
            "c",
            "--train-sizes",
            "25",
            "--instances",
            "2",
            "--variants",
            "unpenalized",
            "--seed",
            "3",
            "--n-val",
            "120",
            "--n-test",
            "120",
        ]);
        assert_code(&out, 0);
        reports.push(strip_wall_ms(
            &fs::read_to_string(bench.join("report.csv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_code(&out, 0);
    assert!(stdout(&out).contains("Usage"));
}
