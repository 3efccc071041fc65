use std::path::Path;
use std::process::Command;

fn dpotb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpotb"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    write_config_with_rho(dir, 1.0, extra)
}

fn write_config_with_rho(dir: &Path, rho: f64, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let body = format!(
        r#"{{"instance": {{"family": "quadratic", "dim": 4, "diameter": 2.0, "sigma_g": 0.5, "seed": 2}},
            "variant": {{"mode": "plain", "k": 1}}, "learner": "osd",
            "privacy": {{"rho": {rho:?}}}, "horizons": [32, 64, 128, 256], "seeds": 2{extra}}}"#
    );
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_writes_outputs_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let status = dpotb()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seeds", "3", "--trace", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let raw = std::fs::read_to_string(out.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 4 * 3);
    assert!(out.join("aggregate.json").exists());
    assert!(out.join("trace_128_2.csv").exists());
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("gap slope"));
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(dpotb().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
        files.push(std::fs::read(out.join("raw.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config_with_rho(dir.path(), -2.0, "");
    let out = dpotb().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("privacy.rho"), "{stderr}");
}

#[test]
fn budget_prints_grid_epsilon() {
    let out = dpotb().args(["budget", "--rho", "1", "--delta", "0.36787944117144233", "--horizon", "64"]).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eps = report["epsilon"].as_f64().unwrap();
    assert!((2.0..=2.001).contains(&eps), "{eps}");
    assert_eq!(report["per_node_max_IN"].as_u64(), Some(7));

    let public = dpotb().args(["budget", "--rho", "inf", "--delta", "1e-5"]).output().unwrap();
    assert!(public.status.success());
    assert!(String::from_utf8_lossy(&public.stdout).contains("inf"));
    assert!(!dpotb().args(["budget", "--rho=-1", "--delta", "1e-5"]).status().unwrap().success());
}

#[test]
fn compare_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#", "arms": [{"label": "k1"}, {"label": "k2", "variant": {"mode": "plain", "k": 2}}]"#,
    );
    let out = dpotb().args(["compare", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("k1") && table.contains("k2"));
    assert!(dir.path().join("compare.json").exists());
}

/// Exit status mirrors the report: the fast level carries the known
/// conversion-window failure, so the command exits non-zero.
#[test]
fn verify_reports_every_check_and_sets_the_exit_code() {
    let out = dpotb().args(["verify", "--level", "fast", "--json"]).output().unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 13);
    let all = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(out.status.success(), all);
}
