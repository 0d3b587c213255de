//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use ridge_sketch::bench::PLOT_HEADER;
use ridge_sketch::data::load_csv;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ridge-sketch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_data() -> [&'static str; 7] {
    ["--synthetic", "exp", "--n", "256", "--d", "16", "--data-seed"]
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_a_converged_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    let mut args = vec!["solve"];
    args.extend(small_data());
    args.extend(["3", "--nu", "0.1", "--oracle", "--out", out.to_str().unwrap()]);
    let run = cli(&args);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let json = read_json(&out);
    assert_eq!(json["converged"], true);
    assert!(json["oracle"]["relative_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(json["report"]["x"].as_array().unwrap().len(), 16);
}

#[test]
fn every_method_solves() {
    for method in ["adaptive", "cg", "pcg"] {
        let mut args = vec!["solve"];
        args.extend(small_data());
        args.extend(["1", "--method", method, "--sketch", "gaussian"]);
        let run = cli(&args);
        assert_eq!(run.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&run.stderr));
        let json: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
        assert_eq!(json["converged"], true);
    }
}

#[test]
fn out_of_range_rho_is_an_input_error() {
    let mut args = vec!["solve"];
    args.extend(small_data());
    args.extend(["1", "--sketch", "gaussian", "--rho", "0.3"]);
    let run = cli(&args);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("ridge-sketch:"));
    args.push("--allow-out-of-range");
    assert_eq!(cli(&args).status.code(), Some(0));
}

#[test]
fn unconverged_solve_exits_one() {
    let mut args = vec!["solve"];
    args.extend(small_data());
    args.extend(["1", "--max-iters", "2"]);
    assert_eq!(cli(&args).status.code(), Some(1));
}

#[test]
fn missing_and_malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(cli(&["solve", "--csv", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3\n4,x,6\n").unwrap();
    let run = cli(&["solve", "--csv", bad.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 2"));
    let mut args = vec!["path"];
    args.extend(small_data());
    args.extend(["1", "--nus", "0.1,1"]);
    assert_eq!(cli(&args).status.code(), Some(2));
}

#[test]
fn synth_round_trips_through_csv_and_libsvm() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let run = cli(&["synth", "--kind", "poly", "--n", "40", "--d", "5", "--out", csv.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let ds = load_csv(&csv).unwrap();
    assert_eq!((ds.meta.n, ds.meta.d), (40, 5));
    let run = cli(&["solve", "--csv", csv.to_str().unwrap(), "--nu", "0.5"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let svm = dir.path().join("data.svm");
    std::fs::write(&svm, "1 1:0.5 3:2\n-1 2:1\n0.5 1:1 2:1 3:1\n2 3:4\n").unwrap();
    let run = cli(&["solve", "--libsvm", svm.to_str().unwrap(), "--nu", "1", "--method", "cg"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn wide_data_goes_through_the_dual() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("wide.csv");
    std::fs::write(&csv, "1,1,2\n").unwrap();
    let run = cli(&["solve", "--csv", csv.to_str().unwrap(), "--nu", "1", "--eps", "1e-14"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    for v in json["report"]["x"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    }
}

#[test]
fn path_and_compare_emit_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path_out = dir.path().join("path.json");
    let mut args = vec!["path"];
    args.extend(small_data());
    args.extend(["2", "--nus", "1,0.1,0.01", "--oracle", "--out", path_out.to_str().unwrap()]);
    assert_eq!(cli(&args).status.code(), Some(0));
    let json = read_json(&path_out);
    assert_eq!(json["steps"].as_array().unwrap().len(), 3);

    let report = dir.path().join("compare.json");
    let plot = dir.path().join("plot.csv");
    let mut args = vec!["compare"];
    args.extend(small_data());
    args.extend([
        "2",
        "--nus",
        "1,0.1",
        "--solvers",
        "adaptive-gaussian,cg,pcg-gaussian",
        "--repeats",
        "2",
        "--out",
        report.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    let run = cli(&args);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read_json(&report)["rows"].as_array().unwrap().len(), 3);
    let text = std::fs::read_to_string(&plot).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), PLOT_HEADER.join(","));
    assert_eq!(lines.count(), 3 * 2);
}

#[test]
fn concentration_reports_json() {
    let run = cli(&[
        "concentration", "--spectrum", "flat", "--d", "8", "--n", "128", "--trials", "20", "--m", "64",
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(json["trials"].as_array().unwrap().len(), 20);
    assert_eq!(json["m"], 64);
}
