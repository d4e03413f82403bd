use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use newton_soliton_cli::output::without_timestamp;
use serde_json::Value;

const SMALL: &str = r#"
[grid]
n = 32
box_length = 20.0

[ground_state]
decay_window = [3.0, 6.0]

[dynamics]
eps = 0.5
t_final = 0.25
output_stride = 10
track_modulation = false

[campaign]
seed = 7
eps = [0.5]
"#;

fn cli(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_newton-soliton"))
        .args(["--config", path.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .args(args)
        .env("NEWTON_SOLITON_CACHE", dir.join("cache"))
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Map<String, Value> {
    match serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap() {
        Value::Object(m) => m,
        other => panic!("not an object: {other}"),
    }
}

#[test]
fn ground_state_is_cached_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = cli(dir.path(), SMALL, &["ground-state"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let out = dir.path().join("out/ground-state");
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(json(&out.join("ground_state.json"))["cache"], "computed");
    assert!(dir.path().join("cache/ground_state_n32.bin").exists());

    let second = cli(dir.path(), SMALL, &["ground-state"]);
    assert!(second.status.success());
    let meta = json(&out.join("ground_state.json"));
    assert_eq!(meta["cache"], "loaded");
    assert_eq!(meta["grid_n"], 32);
    assert_eq!(meta["seed"], 7);
    assert!(meta.values().all(|v| !v.is_object() && !v.is_array()));
    assert_eq!(without_timestamp(&profile), without_timestamp(&fs::read_to_string(out.join("profile.csv")).unwrap()));
}

#[test]
fn cache_for_another_box_needs_rebuild() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cli(dir.path(), SMALL, &["ground-state"]).status.success());
    let other = SMALL.replace("box_length = 20.0", "box_length = 22.0");
    let out = cli(dir.path(), &other, &["ground-state"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rebuild"));
    assert!(cli(dir.path(), &other, &["ground-state", "--rebuild"]).status.success());
}

#[test]
fn evolve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |dir: &Path| fs::read_to_string(dir.join("out/evolve/series_eps0.5.csv")).unwrap();
    let a = cli(dir.path(), SMALL, &["evolve"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let first = read(dir.path());
    assert!(cli(dir.path(), SMALL, &["evolve"]).status.success());
    let second = read(dir.path());
    assert_eq!(without_timestamp(&first), without_timestamp(&second));
    assert!(first.lines().any(|l| l.starts_with("# config_hash = ")));
    assert!(first.lines().any(|l| l == "# eps = [0.5]"));
    let rows = first.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 100 / 10);
}

#[test]
fn evolve_refuses_to_leave_the_window() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL.replace("t_final = 0.25", "t_final = 8.0\nrecenter = false\nv0 = [1.0, 0.0, 0.0]");
    let out = cli(dir.path(), &config, &["evolve"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("leaves the simulation window"));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let typo = SMALL.replace("seed = 7", "seed = 7\nsead = 8");
    let out = cli(dir.path(), &typo, &["ground-state"]);
    assert!(!out.status.success());
    let no_seed = SMALL.replace("seed = 7", "");
    assert!(!cli(dir.path(), &no_seed, &["ground-state"]).status.success());
}

#[test]
fn seed_flag_overrides_the_config_and_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let base = tempfile::tempdir().unwrap();
    assert!(cli(base.path(), SMALL, &["ground-state"]).status.success());
    assert!(cli(dir.path(), SMALL, &["ground-state", "--seed", "8"]).status.success());
    let a = json(&base.path().join("out/ground-state/ground_state.json"));
    let b = json(&dir.path().join("out/ground-state/ground_state.json"));
    assert_eq!(b["seed"], 8);
    assert_ne!(a["config_hash"], b["config_hash"]);
}

/// The quick tier fails exactly the two checks whose targets contradict
/// the equations (decay rate and dilation identity), so `validate` exits
/// nonzero while writing a complete report.
#[test]
fn quick_validation_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), newton_soliton_cli::config::DEFAULT_CONFIG, &["validate", "--quick"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(!out.status.success(), "{stdout}");
    let report = json(&dir.path().join("out/validate-quick/acceptance.json"));
    assert_eq!(report["tier"], "quick");
    assert_eq!(report["all_pass"], false);
    let failing: Vec<&String> =
        report.iter().filter(|(k, v)| k.ends_with("_pass") && *k != "all_pass" && **v == Value::Bool(false)).map(|(k, _)| k).collect();
    assert_eq!(failing, ["c02_log_derivative_limit_pass", "c03_dilation_identity_pass"], "{stdout}");
    for c in 1..=12 {
        assert!(report.keys().any(|k| k.starts_with(&format!("c{c:02}_"))), "criterion {c} missing");
    }
}
