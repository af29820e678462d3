use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use tempfile::TempDir;

use xychain_sweep::{run_sweep, validate_config, RunOptions, CSV_COLUMNS};

const BIN: &str = env!("CARGO_BIN_EXE_xychain");

const STATIC: &str = r#"
name = "static_small"
model = "static"
n_sites = 6

[grid]
gamma_min = 0.0
gamma_max = 1.0
gamma_steps = 5
h_min = 0.0
h_max = 1.5
h_steps = 4
"#;

const FULL: &str = r#"
name = "full_small"
model = "kicked-full"
n_sites = 3
gamma = 0.1
alpha = 2.0
observables = ["fermionic", "local"]

[grid]
a_min = 0.2
a_max = 1.2
a_steps = 3
tau_min = 0.3
tau_max = 1.5
tau_steps = 2
"#;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into(),
        String::from_utf8_lossy(&out.stderr).into(),
    )
}

#[test]
fn static_sweep_writes_csv_and_metadata() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", &STATIC.replace("gamma_max = 1.0", "gamma_max = 0.9"));
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "static-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("static_small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 20);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("static_small.json")).unwrap()).unwrap();
    assert_eq!(meta["record_count"], 20);
    assert_eq!(meta["config"]["bath"]["gamma_2l"], 0.3);
    assert_eq!(meta["config_digest"].as_str().unwrap().len(), 64);
    assert!(meta["tolerances"]["lyapunov_residual"].is_number());
    assert_eq!(meta["records"].as_array().unwrap().len(), 20);
}

#[test]
fn masked_cells_give_partial_exit_code() {
    // gamma = 1, h = 0 leaves an undamped mode
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", STATIC);
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&[
        "static-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(stdout.contains("1 masked"));
    let csv = std::fs::read_to_string(out.join("static_small.csv")).unwrap();
    let masked: Vec<&str> = csv.lines().filter(|l| l.ends_with(",no-unique-ness")).collect();
    assert_eq!(masked.len(), 1);
    assert!(masked[0].starts_with("static,6,1.0,NN,,,0.0,c_res,,,,"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.toml", "");
    let (code, _, err) = run(&["validate", "--config", empty.to_str().unwrap()]);
    assert_eq!(code, 1);
    for key in ["`model`", "`n_sites`", "`grid`"] {
        assert!(err.contains(key), "{err}");
    }
    let cfg = write(dir.path(), "s.toml", STATIC);
    let (code, _, err) = run(&["kicked-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = run(&["validate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", &STATIC.replace("gamma_max = 1.0", "gamma_max = 0.5"));
    let blocker = write(dir.path(), "blocker", "");
    let (code, _, err) = run(&[
        "static-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn validate_prints_normalised_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "k.toml", &FULL.replace("a_max = 1.2", "a_max = 10.0"));
    let (code, stdout, stderr) = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stderr.contains("folded"));
    assert!(stdout.contains("\"kick_order\": \"free-then-kick\""));
    assert!(stdout.contains("digest: "));
}

#[test]
fn records_are_identical_across_worker_counts() {
    let config = validate_config(FULL).unwrap();
    let one = run_sweep(
        &config,
        RunOptions {
            workers: Some(1),
            seed: None,
        },
    )
    .unwrap();
    let three = run_sweep(
        &config,
        RunOptions {
            workers: Some(3),
            seed: Some(7),
        },
    )
    .unwrap();
    assert_eq!(one.records.len(), 12);
    assert_eq!(one.to_csv().unwrap(), three.to_csv().unwrap());
    let csv = String::from_utf8(one.to_csv().unwrap()).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("kicked-full,3,0.1,2,0.2,0.3,"));
    assert!(csv.contains(",c_res_loc,"));
}

#[test]
fn cut_concatenates_chain_sizes() {
    let dir = TempDir::new().unwrap();
    let body = r#"
name = "cut_small"
model = "kicked-cov"
gamma = 0.1
[grid]
a_min = 1.25
a_max = 1.25
a_steps = 1
tau_min = 0.1
tau_max = 2.0
tau_steps = 5
[cut]
n_list = [4, 6, 9]
"#;
    let cfg = write(dir.path(), "c.toml", body);
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "cut",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("cut_small.csv")).unwrap();
    let sizes: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(sizes, [vec!["4"; 5], vec!["6"; 5], vec!["9"; 5]].concat());
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            xychain_sweep::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert_eq!(count, 18);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn record_count_equals_grid_size(g_steps in 1usize..4, h_steps in 1usize..4, n in 2usize..6) {
        let body = STATIC
            .replace("n_sites = 6", &format!("n_sites = {n}"))
            .replace("gamma_min = 0.0", "gamma_min = 0.2")
            .replace("gamma_steps = 5", &format!("gamma_steps = {g_steps}"))
            .replace("h_steps = 4", &format!("h_steps = {h_steps}"));
        let config = validate_config(&body).unwrap();
        let data = run_sweep(&config, RunOptions::default()).unwrap();
        prop_assert_eq!(data.records.len(), g_steps * h_steps);
        prop_assert!(data.records.iter().all(|r| r.value.is_some() != r.is_masked()));
        let meta = data.metadata();
        prop_assert_eq!(meta["config_digest"].as_str().unwrap(), config.digest());
    }

    #[test]
    fn unknown_keys_are_always_reported(key in "[a-z]{3,10}") {
        prop_assume!(!["name", "model", "gamma", "alpha", "bath", "grid", "distance", "output", "cut", "workers"].contains(&key.as_str()));
        let errs = validate_config(&format!("{key} = 1\n{STATIC}")).unwrap_err().0;
        let needle = format!("`{}`", key);
        prop_assert!(errs.iter().any(|e| e.contains(&needle)));
    }
}
