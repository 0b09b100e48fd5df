//! End-to-end checks of the `ambc` binary: reproducible outputs, sidecar
//! metadata, and error reporting on malformed configuration.

use std::fs;
use std::process::Command;

fn ambc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ambc"))
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "snr_db = 10\ntrials = 50\nn_samples = 50\nchannel_seed = 3\n").unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let status = ambc()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .args(["--seed", "42", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    // The sidecar records the resolved experiment and parses back.
    let meta = fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(v["snr_db"], 10.0);
    assert_eq!(v["trials"], 50);
}

#[test]
fn analytic_and_estimate_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("analytic.csv");
    let status = ambc().args(["analytic", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() >= 2, "no data rows in {text}");

    let out = dir.path().join("estimate.csv");
    let status = ambc()
        .args(["estimate", "--seed", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(fs::read_to_string(&out).unwrap().contains("gamma"));
}

#[test]
fn unknown_config_key_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "snr_dbx = 10\n").unwrap();
    let output = ambc()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("snr_dbx"), "stderr should name the bad key: {err}");
}

#[test]
fn sweep_axis_parses_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "trials = 20\nn_samples = 50\nk_symbols = 50\nchannel_seed = 3\n").unwrap();
    let out = dir.path().join("sweep.json");
    let status = ambc()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--axis", "snr_db", "--values", "0,10", "--format", "json", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["ber"].is_number());
}
