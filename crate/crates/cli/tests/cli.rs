use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn gof() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gof"));
    c.env_remove("GOF_TABLE_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    gof().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Evenly spread values in (0, 1): far from any rejection.
fn write_grid_sample(dir: &Path, n: usize) -> String {
    let path = dir.join("grid.txt");
    let text: String = (1..=n).map(|i| format!("{}\n", (i as f64 - 0.5) / n as f64)).collect();
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn test_json_reports_value_and_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_grid_sample(dir.path(), 100);
    let o = run(&["test", "--input", &input, "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 100);
    assert_eq!(v["critical_values_from"], "builtin");
    let decisions = v["decisions"].as_array().unwrap();
    assert_eq!(decisions.len(), 3);
    assert_eq!(decisions[1]["critical_value"], 4.14);
    assert!(decisions.iter().all(|d| d["reject"] == false));
    assert!(v["statistic"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn shifted_sample_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shift.txt");
    let text: String = (1..=200).map(|i| format!("{}\n", 0.7 * (i as f64 - 0.5) / 200.0)).collect();
    std::fs::write(&path, text).unwrap();
    let o = run(&["test", "--input", path.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["decisions"].as_array().unwrap().iter().all(|d| d["reject"] == true));
}

#[test]
fn reads_stdin() {
    let mut child = gof()
        .args(["test", "--input", "-", "--family", "ks_two_sided"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0.1\n0.4\n# note\n0.8\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("kolmogorov"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_grid_sample(dir.path(), 50);

    // Malformed data.
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.2\n1,5\n").unwrap();
    let o = run(&["test", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"));

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(run(&["test", "--input", empty.to_str().unwrap()]).status.code(), Some(3));

    // Values outside the support of the null.
    let o = run(&["test", "--input", &input, "--null", "exponential"]);
    assert!(o.status.success());
    let neg = dir.path().join("neg.txt");
    std::fs::write(&neg, "-1\n0.5\n").unwrap();
    assert_eq!(run(&["test", "--input", neg.to_str().unwrap(), "--null", "exponential"]).status.code(), Some(3));

    // No table for this weight.
    let o = run(&["test", "--input", &input, "--weight", "sdp"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("gof tabulate"));

    // Flag problems.
    assert_eq!(run(&["test", "--input", &input, "--family", "hc"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--input", &input, "--interval", "0.5,0.2"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--input", &input, "--family", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["band", "--input", &input, "--alpha", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["--threads", "0", "hc"]).status.code(), Some(2));
}

#[test]
fn higher_criticism_reports_normalized_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_grid_sample(dir.path(), 100);
    let o = run(&["test", "--input", &input, "--family", "hc", "--alpha0", "0.2", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["ej_normalized"].is_f64());
    assert!(v["decisions"].as_array().unwrap().is_empty());
    assert_eq!(v["statistic"]["interval"]["b"], 0.2);
}

#[test]
fn band_csv_rows_are_ordered_and_nested() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_grid_sample(dir.path(), 80);
    for method in ["cscshm", "ks", "eicker_jaeschke"] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = run(&["band", "--input", &input, "--method", method, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,edf,lower,upper"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 79);
        for w in rows.windows(2) {
            assert!(w[0][0] < w[1][0]);
        }
        for r in &rows {
            assert!(0.0 <= r[2] && r[2] <= r[1] && r[1] <= r[3] && r[3] <= 1.0, "{method}: {r:?}");
        }
    }
}

#[test]
fn tabulate_is_thread_count_invariant_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "2", "4"] {
        let out = dir.path().join(format!("t{threads}.json"));
        let o = run(&[
            "--threads", threads, "tabulate", "--n", "400", "--m", "600", "--sided", "two", "--seed", "11", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(&out).unwrap());
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("t{threads}.json.manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(manifest["seed"], 11);
        assert_eq!(manifest["flags"]["n"], 400);
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);

    // A two-sided table unlocks the band at other levels, found via the
    // table directory.
    let input = write_grid_sample(dir.path(), 60);
    let o = gof()
        .env("GOF_TABLE_DIR", dir.path())
        .args(["band", "--input", &input, "--alpha", "0.1", "--table", "t1.json"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    // ...but is rejected for a one-sided test.
    let t1 = dir.path().join("t1.json");
    let o = run(&["test", "--input", &input, "--table", t1.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn tabulate_raw_sidecar_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.json");
    let o = run(&["tabulate", "--n", "300", "--m", "500", "--seed", "5", "--raw", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("one.raw.csv").exists());
    let input = write_grid_sample(dir.path(), 60);
    let o = run(&["test", "--input", &input, "--table", out.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["critical_values_from"].as_str().unwrap().contains("300"));
}

#[test]
fn detect_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("power.csv");
    let o = run(&[
        "detect", "--model", "chisq", "--nu", "3", "--n", "500", "--beta", "0.6", "--r", "0,0.9", "--reps", "40",
        "--seed", "9", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,nu,n,beta,r,alpha,reps,power,stderr,rho");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("chisq,3,500,0.6,0,0.05,40,"));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("power.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "detect");
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn hc_summary_json() {
    let o = run(&["hc", "--n", "500", "--m", "60", "--alpha0", "1", "--sided", "two", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["M"], 60);
    assert_eq!(v["manifest"]["subcommand"], "hc");
    let d = v["ks_distance"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&d));
}
