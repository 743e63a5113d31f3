//! Black-box checks of the command line binary: artifact creation,
//! run-to-run determinism, and the exit-code contract (0 success, 2 config
//! error, 3 hypothesis violation, 4 numerical failure).

use std::path::PathBuf;
use std::process::{Command, Output};

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osciwave"))
        .args(args)
        .output()
        .expect("the binary should spawn")
}

/// Fresh scratch directory under the system temp dir (removed first so
/// reruns of the test suite start clean).
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("osciwave-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn run_writes_the_energy_table_and_conserves_the_free_wave() {
    let dir = scratch("free-wave");
    let out = run_cli(&["run", "free-wave", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("free-wave-energy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,energy,i1,i2,i3,i4,bound_ratio"));
    let mut rows = 0;
    for line in lines {
        let ratio: f64 = line.split(',').last().unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 1e-6, "conservation broke: {line}");
        rows += 1;
    }
    assert_eq!(rows, 33, "one row per configured time sample");
}

#[test]
fn reruns_are_byte_identical() {
    let first = scratch("det-a");
    let second = scratch("det-b");
    for dir in [&first, &second] {
        let out = run_cli(&["run", "free-wave", "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(first.join("free-wave-energy.csv")).unwrap();
    let b = std::fs::read(second.join("free-wave-energy.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_subcommand_writes_the_hypothesis_report() {
    let dir = scratch("verify");
    let out = run_cli(&["verify", "free-wave", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("free-wave-hypotheses.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(report["stabilization_constant"].is_number());
    assert!(report["cm_constants"].is_array());
    // Only the requested stage may run: no energy table.
    assert!(!dir.join("free-wave-energy.csv").exists());
}

#[test]
fn malformed_scenario_exits_with_the_config_code_and_writes_nothing() {
    let dir = scratch("malformed");
    let file = dir.join("bad.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&file, "name = \"bad\"\nnot_a_section = 1\n").unwrap();
    let out_dir = dir.join("out");
    let out = run_cli(&["run", file.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!out_dir.exists(), "a config error must not leave artifacts behind");
}

#[test]
fn missing_scenario_exits_with_the_config_code() {
    let out = run_cli(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read scenario"));
}

#[test]
fn violated_hypothesis_exits_with_code_three_and_records_the_violation() {
    // p >= q - 1 makes the oscillation tail integral diverge, so the
    // dissipative-zone series has no conserved-weight function to compare
    // against; the run must fail as a hypothesis violation, not a crash.
    let dir = scratch("violation");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("divergent.toml");
    std::fs::write(
        &file,
        r#"
name = "divergent-tail"

[coefficient]
mu0 = 0.5
m = 2
[coefficient.sigma]
kind = "sine"
p = 2.5
q = 3.0

[rates]
alpha = -1.0
beta = 0.0

[data]
n = 1
[data.family]
kind = "sobolev"
s = 2.0

[run]
t_end = 5.0
n_param = 64.0
stages = ["volterra"]
"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = run_cli(&["run", file.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(out_dir.join("divergent-tail-violation.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["stage"], "volterra");
    assert!(report["hypothesis_violation"].as_str().unwrap().contains("diverges"));
}
