use std::fs;
use std::path::Path;
use std::process::Command;

fn nrlevy(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nrlevy"))
        .args(args)
        .env("RUST_LOG", "warn")
        .status()
        .expect("binary runs")
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const THEOREM1: &str = r#"
[run]
experiment = "theorem1"
seed = 42
replicas = 3000

[triplet]
gaussian_factor = [1.0]

[params]
p = 0.3
mesh = [10, 100, 1000]
"#;

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), THEOREM1);
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let code = nrlevy(&["--config", &config, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(code == 0 || code == 2, "exit {code}");
        reports.push(fs::read(out.join("report.json")).unwrap());
        assert!(out.join("plotdata.csv").exists());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports.pop().unwrap()).unwrap();
    assert!(!text.contains("threads"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), THEOREM1);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    nrlevy(&["--config", &config, "--out", a.to_str().unwrap(), "--mesh", "10,100"]);
    nrlevy(&["--config", &config, "--out", b.to_str().unwrap(), "--mesh", "10,100", "--seed", "7"]);
    let ra = nrlevy::output::read_report(&a.join("report.json")).unwrap();
    let rb = nrlevy::output::read_report(&b.join("report.json")).unwrap();
    assert_eq!(ra.schedule, vec![10, 100]);
    assert_eq!(ra.params["seed"], 42);
    assert_eq!(rb.params["seed"], 7);
    assert_ne!(ra.distances, rb.distances);
}

#[test]
fn histogram_of_yule_simon_draws() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ys");
    let code = nrlevy(&["--experiment", "simulate-ys", "--rho", "2", "--replicas", "200000", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_path(out.join("histogram.csv")).unwrap();
    let first = reader.records().next().unwrap().unwrap();
    assert_eq!(&first[0], "1");
    let freq: f64 = first[2].parse().unwrap();
    let se = (2.0 / 9.0 / 200_000.0f64).sqrt();
    assert!((freq - 2.0 / 3.0).abs() < 4.0 * se, "{freq}");
}

#[test]
fn usage_and_configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(nrlevy(&["--experiment", "supercritical", "--alpha", "1.5", "--p", "0.5", "--mesh", "10,100", "--out", out]), 1);
    assert_eq!(
        nrlevy(&["--experiment", "theorem1", "--family", "stable", "--alpha", "1.5", "--p", "0.8", "--mesh", "10", "--out", out]),
        1
    );
    assert_eq!(nrlevy(&["--experiment", "theorem9", "--out", out]), 1);
    assert_eq!(nrlevy(&["--no-such-flag"]), 1);
    let config = write_config(dir.path(), "[run]\nexperiment = \"moments\"\nrho = 2.0\n");
    assert_eq!(nrlevy(&["--config", &config, "--out", out]), 1);
    assert_eq!(nrlevy(&["--config", "/nonexistent/run.toml"]), 1);
    assert!(!Path::new(out).join("report.json").exists());
    assert_eq!(nrlevy(&["--help"]), 0);
}

#[test]
fn failed_verdict_exits_with_two() {
    // a 1 / sqrt(R) threshold far below the distance at mesh 2
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fail");
    let code = nrlevy(&[
        "--experiment", "theorem1", "--gaussian-factor", "1", "--p", "0.3", "--mesh", "1,2",
        "--replicas", "20000", "--tolerance-mult", "0.01", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let report = nrlevy::output::read_report(&out.join("report.json")).unwrap();
    assert!(!report.verdict.unwrap().pass);
}
