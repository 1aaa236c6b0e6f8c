use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robust_causal::{import_graph, GroundTruth};
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-causal")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_system_a() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a.csv");
    let r = cli(&["generate", "--system", "A", "--length", "1000", "--seed", "1", "--out", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("X,Y,Z,W"));
    assert_eq!(lines.count(), 1000);
    let truth: GroundTruth = serde_json::from_str(&fs::read_to_string(tmp.path().join("a.truth.json")).unwrap()).unwrap();
    assert!(truth.true_links.is_empty());
    let manifest = read_json(&tmp.path().join("a.manifest.json"));
    assert_eq!(manifest["config"]["rng_seed"], 1);
    assert_eq!(manifest["command"], "generate");
}

#[test]
fn generate_bivariate_and_truth_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bi.csv");
    let truth = tmp.path().join("t.json");
    let r = cli(&[
        "generate", "--system", "bivariate-linear", "--m", "0.5", "--eps", "1", "--length", "100", "--seed", "4",
        "--out", p(&out), "--truth", p(&truth),
    ]);
    assert!(r.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("X,Y"));
    assert_eq!(text.lines().count(), 101);
    let t: GroundTruth = serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    assert_eq!(t.true_links[0].coefficient, 0.5);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x.csv");
    let r = cli(&["generate", "--system", "A", "--length", "10", "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let dir = tmp.path().join("ev");
    let r = cli(&["evaluate", "--trials", "0", "--seed", "1", "--out", p(&dir)]);
    assert_eq!(r.status.code(), Some(2));
    let r = cli(&["analyze", "--system", "A", "--length", "300", "--out", p(&dir)]);
    assert_eq!(r.status.code(), Some(2));
    let r = cli(&["analyze", "--system", "A", "--length", "300", "--input", "x.csv", "--seed", "1", "--out", p(&dir)]);
    assert_eq!(r.status.code(), Some(2));
    let r = cli(&["analyze", "--bins", "one", "--seed", "1", "--out", p(&dir)]);
    assert_eq!(r.status.code(), Some(2));
    let r = cli(&["analyze", "--system", "A", "--length", "300", "--seed", "1", "--threshold", "1.5", "--out", p(&dir)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn computation_errors_exit_one_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "a,b\n1,2\n3,inf\n").unwrap();
    let r = cli(&["analyze", "--input", p(&input), "--seed", "1", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(r.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&r.stderr).trim()).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());

    let r = cli(&["analyze", "--input", p(&tmp.path().join("missing.csv")), "--seed", "1", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(r.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&r.stderr).trim()).unwrap();
    assert_eq!(err["error"], "Io");
}

#[test]
fn analyze_writes_the_output_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let r = cli(&[
        "analyze", "--system", "B", "--length", "500", "--method", "gc", "--subsamples", "10", "--sub-length", "150",
        "--seed", "3", "--out", p(&dir),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["manifest.json", "graph.json", "graph.dot", "frequencies.csv", "robust_graph.json", "scores.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let g = import_graph(&fs::read_to_string(dir.join("graph.json")).unwrap()).unwrap();
    assert!(g.contains("X", "W", 1));
    assert!(fs::read_to_string(dir.join("frequencies.csv")).unwrap().starts_with("source,target,lag,count,fraction"));

    let single = tmp.path().join("single");
    let r = cli(&["analyze", "--system", "A", "--length", "300", "--seed", "3", "--out", p(&single)]);
    assert!(r.status.success());
    assert!(single.join("graph.json").exists());
    assert!(!single.join("robust_graph.json").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"system": {"kind": "A", "length": 400}, "graph": {"max_lag": 2, "bins": 5}, "seed": 9}"#,
    )
    .unwrap();
    let dir = tmp.path().join("o");
    let r = cli(&["analyze", "--config", p(&config), "--max-lag", "3", "--out", p(&dir)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let m = read_json(&dir.join("manifest.json"));
    assert_eq!(m["config"]["graph"]["max_lag"], 3);
    assert_eq!(m["config"]["graph"]["bins"], 5);
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["graph"]["surrogate"]["rng_seed"], 9);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tmp.path().join(threads);
        let r = Command::new(env!("CARGO_BIN_EXE_robust-causal"))
            .env("ROBUST_CAUSAL_THREADS", threads)
            .args(["analyze", "--system", "C", "--length", "400", "--subsamples", "12", "--sub-length", "100"])
            .args(["--seed", "5", "--out", p(&dir)])
            .output()
            .unwrap();
        assert!(r.status.success());
        outputs.push((
            fs::read(dir.join("frequencies.csv")).unwrap(),
            fs::read(dir.join("robust_graph.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn evaluate_writes_curve_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ev");
    let r = cli(&[
        "evaluate", "--lengths", "100", "--ratios", "0.5,2", "--trials", "100", "--seed", "3", "--out", p(&dir),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(dir.join("error_rates.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "data_length,m_over_eps,fnr,fpr,n_trials");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("100,0.5,") && lines[1].ends_with(",100"));
    assert!(fs::read_to_string(dir.join("ensemble_error.csv")).unwrap().lines().count() == 3);
}

#[test]
fn sensitivity_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let r = cli(&[
        "sensitivity", "--system", "A", "--length", "400", "--center", "6", "--radius", "1", "--seed", "2", "--out",
        p(&dir),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for b in 5..=7 {
        assert!(dir.join(format!("graph_bins_{b}.dot")).exists());
    }
    let csv = fs::read_to_string(dir.join("sensitivity.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("6,"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",1"));
    let r = cli(&[
        "sensitivity", "--system", "A", "--length", "400", "--center", "3", "--radius", "2", "--seed", "2", "--out",
        p(&dir),
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn ratio_ranges() {
    let v = robust_causal_cli::parse_ratios("0.1..2.0", 5).unwrap();
    assert_eq!(v.len(), 5);
    assert_eq!((v[0], v[4]), (0.1, 2.0));
    assert!((v[2] - 1.05).abs() < 1e-12);
    assert_eq!(robust_causal_cli::parse_ratios("1,2.5", 5).unwrap(), [1.0, 2.5]);
    assert!(robust_causal_cli::parse_ratios("2..1", 5).is_err());
}
