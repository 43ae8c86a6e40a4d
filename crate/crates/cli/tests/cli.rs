use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruleboost")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn parity_csv(dir: &TempDir, d: usize, n: usize) -> String {
    let p = path(dir, "parity.csv");
    ok(&["parity", "--d", &d.to_string(), "--n", &n.to_string(), "--seed", "5", "--out", &p]);
    p
}

fn guarantees(stdout: &str) -> Vec<f64> {
    stdout
        .lines()
        .filter_map(|l| l.split("guarantee ").nth(1))
        .map(|rest| rest.split_whitespace().next().unwrap().parse().unwrap())
        .collect()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(p).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn help_shows_every_default() {
    for sub in ["fit", "predict", "parity", "friedman", "bench"] {
        let help = ok(&[sub, "--help"]);
        let mut flag: Option<String> = None;
        let documented = |flag: &Option<String>, text: &str| {
            if let Some(f) = flag {
                let required =
                    matches!((sub, f.as_str()), ("fit", "--data") | ("predict", "--model") | ("predict", "--data"));
                assert!(required || text.contains("[default"), "{sub} {f} lacks a default:\n{text}");
            }
        };
        let mut text = String::new();
        for line in help.lines().skip_while(|l| !l.starts_with("Options")) {
            let t = line.trim_start();
            if t.starts_with("--") || t.starts_with("-h") {
                documented(&flag, &text);
                flag = t.starts_with("--").then(|| t.split_whitespace().next().unwrap().to_string());
                text = t.to_string();
            } else {
                text.push_str(t);
            }
        }
        documented(&flag, &text);
    }
}

#[test]
fn fit_optimal_is_exact_on_parity() {
    let dir = TempDir::new().unwrap();
    let data = parity_csv(&dir, 2, 200);
    let model = path(&dir, "m.json");
    let out = ok(&[
        "fit",
        "--data",
        &data,
        "--target",
        "y",
        "--task",
        "classification",
        "--learner",
        "optimal",
        "--rules",
        "8",
        "--lambda",
        "0.1",
        "--model",
        &model,
    ]);
    let g = guarantees(&out);
    assert_eq!(g.len(), 8);
    assert!(g.iter().all(|&v| v == 1.0));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["rules"].as_array().unwrap().len(), 8);
    assert_eq!(json["task"], "classification");
}

#[test]
fn fit_alpha_guarantees() {
    let dir = TempDir::new().unwrap();
    let data = parity_csv(&dir, 2, 200);
    let model = path(&dir, "m.json");
    let out = ok(&["fit", "--data", &data, "--rules", "5", "--alpha", "0.8", "--model", &model]);
    let g = guarantees(&out);
    assert!(!g.is_empty());
    assert!(g.iter().all(|&v| v >= 0.8));
}

#[test]
fn flag_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = parity_csv(&dir, 2, 50);
    for args in [
        vec!["fit", "--data", &data, "--rules", "0"],
        vec!["fit", "--data", &data, "--alpha", "1.5"],
        vec!["fit", "--data", &data, "--lambda", "-1"],
        vec!["fit", "--data", &data, "--learner", "best"],
        vec!["parity", "--d", "0"],
        vec!["friedman", "--d", "3"],
        vec!["bench", "--train-frac", "1"],
        vec!["fit"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.csv");
    assert_eq!(run(&["fit", "--data", &missing]).status.code(), Some(1));
    let data = parity_csv(&dir, 2, 50);
    let out = run(&["fit", "--data", &data, "--target", "label"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label"));
}

#[test]
fn predict_classification_and_schema_errors() {
    let dir = TempDir::new().unwrap();
    let data = parity_csv(&dir, 2, 120);
    let model = path(&dir, "m.json");
    ok(&["fit", "--data", &data, "--rules", "3", "--model", &model]);
    let scores = path(&dir, "scores.csv");
    ok(&["predict", "--model", &model, "--data", &data, "--out", &scores]);
    let (header, rows) = read_csv(Path::new(&scores));
    assert_eq!(header, ["row_id", "score", "proba"]);
    assert_eq!(rows.len(), 120);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        let p: f64 = r[2].parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "x1,other\n0.5,1\n").unwrap();
    let out = run(&["predict", "--model", &model, "--data", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x2"));
}

#[test]
fn predict_regression_and_empty_models() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "fr.csv");
    ok(&["friedman", "--n", "100", "--d", "5", "--out", &data]);
    let model = path(&dir, "m.json");
    ok(&["fit", "--data", &data, "--task", "regression", "--rules", "3", "--model", &model]);
    let stdout = ok(&["predict", "--model", &model, "--data", &data]);
    assert_eq!(stdout.lines().next().unwrap(), "row_id,score");
    assert_eq!(stdout.lines().count(), 101);

    let empty = path(&dir, "empty.json");
    fs::write(&empty, r#"{"task":"classification","lambda":1.0,"learner":"optimal","rules":[]}"#).unwrap();
    let stdout = ok(&["predict", "--model", &empty, "--data", &data]);
    for line in stdout.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "0");
        assert_eq!(cells[2], "0.5");
    }
}

#[test]
fn generators_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = ok(&["parity", "--d", "3", "--n", "40", "--seed", "2"]);
    let b = ok(&["parity", "--d", "3", "--n", "40", "--seed", "2"]);
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), "x1,x2,x3,y");
    assert_eq!(a.lines().count(), 41);
    let f = path(&dir, "f.csv");
    ok(&["friedman", "--n", "30", "--d", "6", "--out", &f]);
    let (header, rows) = read_csv(Path::new(&f));
    assert_eq!(header, ["x1", "x2", "x3", "x4", "x5", "x6", "y"]);
    assert_eq!(rows.len(), 30);
}

fn bench(dir: &TempDir, tag: &str, extra: &[&str]) -> (Vec<String>, Vec<Vec<String>>, String) {
    let csv_out = path(dir, &format!("{tag}.csv"));
    let json_out = path(dir, &format!("{tag}.json"));
    let mut args =
        vec!["bench", "--lambdas", "0.1", "--max-thresholds", "8", "--out-csv", &csv_out, "--out-json", &json_out];
    args.extend_from_slice(extra);
    let stdout = ok(&args);
    let (header, rows) = read_csv(Path::new(&csv_out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), rows.len());
    (header, rows, stdout)
}

#[test]
fn bench_builtin_suite() {
    let dir = TempDir::new().unwrap();
    let (header, rows, stdout) = bench(&dir, "a", &["--reps", "5"]);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (dataset, d) in [("parity_d2", 2), ("parity_d3", 3)] {
        for learner in ["optimal", "greedy"] {
            let cell: Vec<&Vec<String>> =
                rows.iter().filter(|r| r[col("dataset")] == dataset && r[col("learner")] == learner).collect();
            assert_eq!(cell.len(), 5 << d, "{dataset} {learner}");
            let ks: std::collections::BTreeSet<usize> = cell.iter().map(|r| r[col("k")].parse().unwrap()).collect();
            assert_eq!(ks, (1..=1 << d).collect());
        }
    }
    assert!(stdout.contains("parity_d3") && stdout.contains("optimal") && stdout.contains("greedy"));

    let strip = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().enumerate().filter(|(i, _)| *i != col("fit_time_s")).map(|(_, c)| c.clone()).collect())
            .collect()
    };
    let (_, again, _) = bench(&dir, "b", &["--reps", "5"]);
    assert_eq!(strip(&rows), strip(&again));
}

#[test]
fn bench_single_learner() {
    let dir = TempDir::new().unwrap();
    let (header, rows, stdout) = bench(&dir, "g", &["--reps", "1", "--learners", "greedy"]);
    let col = header.iter().position(|h| h == "learner").unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[col] == "greedy"));
    assert!(!stdout.contains("optimal"));
}

#[test]
fn bench_on_csv_files() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "fr.csv");
    ok(&["friedman", "--n", "120", "--d", "5", "--out", &data]);
    let (header, rows, _) =
        bench(&dir, "f", &["--data", &data, "--task", "regression", "--reps", "2", "--max-rules", "3"]);
    let metric = header.iter().position(|h| h == "metric").unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(rows.iter().all(|r| r[metric] == "r2"));
}
