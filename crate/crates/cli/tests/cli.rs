use std::path::PathBuf;
use std::process::{Command, Output};

fn ipp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipp")).args(args).output().expect("spawn ipp")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ipp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn data_file() -> PathBuf {
    let rows: String = (0..200).map(|i| format!("{}\n", (i * 7) % 16)).collect();
    temp_file("data.txt", &rows)
}

const PARAMS: [&str; 8] = ["--width", "4", "--eps", "1", "--delta", "0.1", "--beta", "0.1"];

#[test]
fn solve_is_reproducible_and_interior() {
    let input = data_file();
    let mut args = vec!["solve"];
    args.extend(PARAMS);
    args.extend(["--input", input.to_str().unwrap(), "--seed", "5", "--allow-undersized"]);
    let first = stdout(&ipp(&args));
    assert_eq!(first, stdout(&ipp(&args)));
    let x: u64 = first.trim().parse().unwrap();
    assert!(x <= 15);

    args.push("--json");
    let meta: serde_json::Value = serde_json::from_str(&stdout(&ipp(&args))).unwrap();
    assert_eq!(meta["depth"], 1);
    assert_eq!(meta["point"], first.trim());
}

#[test]
fn undersized_solve_fails_with_message() {
    let input = data_file();
    let mut args = vec!["solve"];
    args.extend(PARAMS);
    args.extend(["--input", input.to_str().unwrap()]);
    let out = ipp(&args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs at least"));
}

#[test]
fn release_prints_threshold_csv() {
    let input = data_file();
    for kind in ["thresh", "thresh2"] {
        let mut args = vec!["release", kind, "--alpha", "0.2"];
        args.extend(PARAMS);
        args.extend(["--input", input.to_str().unwrap(), "--allow-undersized", "--csv"]);
        let text = stdout(&ipp(&args));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("threshold,answer"));
        for line in lines {
            let (t, a) = line.split_once(',').unwrap();
            assert!(t.parse::<u64>().unwrap() <= 15);
            assert!((0.0..=1.0).contains(&a.parse::<f64>().unwrap()), "{kind}: {line}");
        }
    }
}

#[test]
fn learn_reports_cutoff_and_error() {
    let rows: String = (0..200).map(|i| format!("{},{}\n", i % 16, u8::from(i % 16 <= 9))).collect();
    let input = temp_file("labeled.txt", &rows);
    let mut args = vec!["learn", "threshold", "--alpha", "0.2"];
    args.extend(PARAMS);
    args.extend(["--input", input.to_str().unwrap(), "--allow-undersized"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&ipp(&args))).unwrap();
    assert!(doc["cutoff"].as_str().unwrap().parse::<u64>().unwrap() <= 15);
    let err = doc["report"]["empirical_error"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&err));
}

#[test]
fn attack_csv_has_one_row_per_trial() {
    let text = stdout(&ipp(&["attack", "fpc", "--users", "3", "--pirate", "median", "--trials", "25", "--seed", "2", "--csv"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,feasible,accused");
    assert_eq!(lines.len(), 26);

    let out = ipp(&["attack", "fpc", "--users", "3", "--pirate", "bogus"]);
    assert!(!out.status.success());
}

#[test]
fn audit_reports_estimate() {
    let text = stdout(&ipp(&["audit", "eps", "--mech", "laplace_count", "--trials", "20000", "--seed", "1"]));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let eps_hat = report["eps_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&eps_hat), "{eps_hat}");
    assert!(!ipp(&["audit", "eps", "--mech", "nope"]).status.success());
}

#[test]
fn bench_writes_csv() {
    let spec = temp_file(
        "spec.json",
        r#"{"experiment":"rec_prefix_utility","widths":[4],"sizes":[100],"eps":1.0,"beta":0.1,"delta":0.1,"trials":5,"seed":0}"#,
    );
    let out = spec.with_file_name("bench.csv");
    stdout(&ipp(&["bench", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("experiment,mechanism,width"));
    assert!(csv.lines().count() > 1);
}
