use std::path::Path;
use std::process::{Command, Output};

fn edqbd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edqbd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("EDQBD_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn optimize_reports_rural_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = edqbd(&["optimize", "--preset", "rural"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("theta* = 5"));
    let csv = std::fs::read_to_string(dir.path().join("theta_curve.csv")).unwrap();
    assert!(csv.starts_with("theta,e_nn,"));
}

#[test]
fn compare_fixed_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = edqbd(&["compare-fixed", "--preset", "nested-vs-fixed", "--theta", "0..24", "--c-total", "18"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("NESTED wins 25/25"));
    let scan = std::fs::read_to_string(dir.path().join("bed_combinations.csv")).unwrap();
    assert!(scan.contains("FIXED UNSTABLE"));
}

#[test]
fn json_format_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = edqbd(&["solve", "--preset", "urban", "--set", "theta=3", "--format", "json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert!(v["objective"]["z"].is_number());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["params"]["theta"], 3);
    assert!(m.get("output_dir").is_none() && m["config"].get("output_dir").is_none());
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_edqbd"))
        .args(["validate", "--preset", "rural"])
        .env("EDQBD_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("validate.json").exists());
}

#[test]
fn errors_exit_with_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unstable = edqbd(&["solve", "--preset", "rural", "--set", "lambda=40"], dir.path());
    assert_eq!(unstable.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unstable.stderr).contains("unstable"));
    let bad_ratio = edqbd(
        &["proportional", "--preset", "rural", "--ratio", "nonsense", "--range", "0.5..2"],
        dir.path(),
    );
    assert_eq!(bad_ratio.status.code(), Some(2));
    let help = Command::new(env!("CARGO_BIN_EXE_edqbd")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn simulate_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let o = edqbd(
        &[
            "simulate", "--preset", "rural", "--horizon", "2000", "--warmup", "100", "--replications", "2",
            "--event-log", log.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("time,event,n_u,n_n\n"));
    assert!(text.lines().count() > 100);
    assert!(dir.path().join("simulation.csv").exists());
}
