//! End-to-end checks of the command-line driver: determinism across
//! invocations and worker counts, exit-code contract, artifact layout.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_prufer-lab");

const SMALL_SPECTRUM: &str = r#"
runs = 4
master_seed = 42

[potential]
alpha = 0.3
dim = 1
fourier = [[1, 1.0, 0.0]]
profile = "power"

[spectrum]
e0 = 1.0
l = 20.0
window = [0.0, 6.283185307179586]
"#;

fn run_spectrum(config: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let output = Command::new(BIN)
        .arg("spectrum")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    let code = output.status.code().unwrap_or(-1);
    let summary_path = out.join("spectrum_summary.json");
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(&summary_path).expect("summary written"),
    )
    .expect("summary is JSON");
    (code, summary)
}

fn strip_volatile(mut v: Value) -> Value {
    if let Some(map) = v.as_object_mut() {
        map.remove("timestamp");
        // the echoed config carries the out_dir override, which differs
        // between the temp dirs of two invocations
        if let Some(echo) = map.get_mut("config_echo").and_then(|e| e.as_object_mut()) {
            echo.remove("out_dir");
        }
    }
    v
}

#[test]
fn repeated_runs_are_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, SMALL_SPECTRUM).unwrap();

    let (code_a, sum_a) = run_spectrum(&config, &dir.path().join("a"), &[]);
    let (code_b, sum_b) = run_spectrum(&config, &dir.path().join("b"), &[]);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(strip_volatile(sum_a), strip_volatile(sum_b));

    // atom tables must agree byte for byte apart from the config echo line
    let atoms = |p: &Path| {
        std::fs::read_to_string(p.join("spectrum_atoms.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(atoms(&dir.path().join("a")), atoms(&dir.path().join("b")));
}

#[test]
fn results_are_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, SMALL_SPECTRUM).unwrap();

    let (_, one) = run_spectrum(&config, &dir.path().join("t1"), &["--threads", "1"]);
    let (_, four) = run_spectrum(&config, &dir.path().join("t4"), &["--threads", "4"]);
    let mut one = strip_volatile(one);
    let mut four = strip_volatile(four);
    // thread-count echo differs by construction; everything else must not
    for v in [&mut one, &mut four] {
        if let Some(echo) = v.get_mut("config_echo").and_then(|e| e.as_object_mut()) {
            echo.remove("threads");
        }
    }
    assert_eq!(one, four);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, SMALL_SPECTRUM).unwrap();

    let (_, a) = run_spectrum(&config, &dir.path().join("a"), &["--seed", "1"]);
    let (_, b) = run_spectrum(&config, &dir.path().join("b"), &["--seed", "2"]);
    assert_ne!(strip_volatile(a), strip_volatile(b));
}

#[test]
fn invalid_toml_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("broken.toml");
    std::fs::write(&config, "runs = [not toml").unwrap();
    let output = Command::new(BIN)
        .arg("spectrum")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error"), "stderr: {stderr}");
}

#[test]
fn missing_table_for_mode_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, SMALL_SPECTRUM).unwrap();
    let output = Command::new(BIN)
        .arg("sinebeta")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_with_usage_code() {
    let output = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn report_mode_emits_a_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    // a deliberately tiny report: exact identities plus a small ensemble
    std::fs::write(
        &config,
        r#"
runs = 8
master_seed = 42

[potential]
alpha = 0.3
dim = 1
fourier = [[1, 1.0, 0.0]]
profile = "power"

[spectrum]
e0 = 1.0
l = 20.0
window = [0.0, 6.283185307179586]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = Command::new(BIN)
        .arg("report")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    // a down-scaled ensemble may fail statistical checks (exit 1) but must
    // never hit a usage error
    let code = output.status.code().unwrap();
    assert!(code == 0 || code == 1, "exit code {code}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("identity.psi_mean"), "stdout: {stdout}");
    assert!(stdout.contains("[PASS]") || stdout.contains("[FAIL]"));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.get("checks").is_some());
}

#[test]
fn explosion_mode_writes_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
runs = 50
master_seed = 7

[sde]
c_n = 20.0
lambda = 3.141592653589793
delta = 0.01
epsilon = 0.01
dt = 1e-4
r0 = -15.0

[explosion]
max_time = 40.0
xi = [1.0]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = Command::new(BIN)
        .arg("explosion")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let sweep = std::fs::read_to_string(out.join("explosion_sweep.csv")).unwrap();
    assert!(sweep.contains("C_n,lambda,r,mean_time,limit_value"));
    let times = std::fs::read_to_string(out.join("explosion_times.csv")).unwrap();
    assert!(times.lines().filter(|l| !l.starts_with('#')).count() > 40);
}
