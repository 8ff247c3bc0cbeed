use std::path::Path;
use std::process::Command;

fn qjl(args: &[&str], out_env: Option<&Path>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qjl"));
    cmd.args(args).env_remove("QJL_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("QJL_OUT_DIR", dir);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn successful_run_writes_json_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("results");
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "chi-tails", "seed": 11, "params": {"trials": 2000}, "output": {"format": "csv"}}"#,
    );
    let (code, stdout) = qjl(&["chi-tails", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("chi-tails-11.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["inputs"]["seed"], 11);
    assert!(json["analytic_bounds"].as_object().unwrap().len() >= 2);
    let csv = std::fs::read_to_string(out.join("chi-tails-11.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn seed_override_and_env_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"experiment": "params", "seed": 1}"#);
    let (code, _) = qjl(&["params", "--config", &cfg, "--seed", "42"], Some(tmp.path()));
    assert_eq!(code, 0);
    assert!(tmp.path().join("params-42.json").exists());
    assert!(!tmp.path().join("params-42.csv").exists());
}

#[test]
fn malformed_config_exits_2_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("results");
    let cases = [
        ("block-dist", r#"{"experiment": "block-dist", "seed": 1, "params": {"d1": 1024, "d2": 48}}"#),
        ("block-dist", r#"{"experiment": "block-dist", "seed": 1, "bogus": true}"#),
        ("pir", r#"{"experiment": "block-dist", "seed": 1}"#),
        ("params", r#"{"experiment": "params", "seed": 1"#),
    ];
    for (sub, body) in cases {
        let cfg = write_config(tmp.path(), "bad.json", body);
        let (code, _) = qjl(&[sub, "--config", &cfg, "--out", out.to_str().unwrap()], None);
        assert_eq!(code, 2, "{body}");
        assert!(!out.exists(), "{body}");
    }
    let cfg = write_config(tmp.path(), "p.json", r#"{"experiment": "params", "seed": 1}"#);
    let (code, _) = qjl(&["params", "--config", &cfg, "--trials", "10", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 2);
    let (code, _) = qjl(&["params", "--config", tmp.path().join("missing.json").to_str().unwrap()], None);
    assert_eq!(code, 2);
}

#[test]
fn violated_check_exits_1_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "block-dist", "seed": 3, "params": {"d1": 64, "d2": 16, "samples": 100, "max_l1": 0.0}}"#,
    );
    let (code, stdout) = qjl(&["block-dist", "--config", &cfg, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAILED"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("block-dist-3.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], false);
    assert_eq!(json["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn worker_override_keeps_bytes_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "haar-tails", "seed": 5, "params": {"d1": 256, "d2": 16, "trials": 400, "moment_trials": 1000}}"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(qjl(&["haar-tails", "--config", &cfg, "--workers", "1", "--out", a.to_str().unwrap()], None).0, 0);
    assert_eq!(qjl(&["haar-tails", "--config", &cfg, "--workers", "4", "--out", b.to_str().unwrap()], None).0, 0);
    assert_eq!(
        std::fs::read(a.join("haar-tails-5.json")).unwrap(),
        std::fs::read(b.join("haar-tails-5.json")).unwrap()
    );
}
