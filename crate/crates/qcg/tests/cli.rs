//! End-to-end checks of the `qcg` binary: argument handling, config layering,
//! output schemas, exit codes, and determinism of rerun sweeps.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qcg::cli::{BLOCH_CSV_HEADER, SWEEP_CSV_HEADER};

fn qcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcg"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_prints_the_fully_resolved_config() {
    let out = qcg(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().map(str::trim).collect();
    assert!(lines.contains(&"ratio=200"));
    assert!(lines.contains(&"tau=1"));
    assert!(lines.contains(&"protocol=cd,fe,ie,uncontrolled"));
    let mut sorted = lines.clone();
    sorted.sort_unstable();
    assert_eq!(lines, sorted, "keys must print in sorted order");
}

#[test]
fn config_file_overrides_defaults_and_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "# sweep setup\nratio=100\ntau=2\n\n").unwrap();
    let out = qcg(&["validate", "--config", path.to_str().unwrap(), "--tau=3"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().map(str::trim).collect();
    assert!(lines.contains(&"ratio=100"), "file value should apply: {stdout}");
    assert!(lines.contains(&"tau=3"), "flag should beat the file: {stdout}");
}

#[test]
fn duration_sweep_writes_the_documented_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = qcg(&[
        "sweep-tau",
        "--protocol=cd",
        "--ramp=linear",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, SWEEP_CSV_HEADER);
    assert_eq!(rows.len(), 40);
    for row in &rows {
        assert_eq!(row.len(), 8);
        assert_eq!((row[0].as_str(), row[1].as_str()), ("duration_sweep", "cd"));
        assert_eq!((row[2].as_str(), row[3].as_str()), ("linear", "tau"));
        let j: f64 = row[5].parse().unwrap();
        assert!(j < 1e-8, "exact scheme must stay at the floor, got {j} at tau {}", row[4]);
        assert!(row[6].is_empty(), "infidelity rows carry no cost column");
    }
    let first: f64 = rows[0][4].parse().unwrap();
    let last: f64 = rows[39][4].parse().unwrap();
    assert_eq!((first, last), (0.1, 10.0));
}

#[test]
fn unknown_enum_values_exit_2_listing_choices() {
    let out = qcg(&["sweep-tau", "ramp=cubic"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    for name in ["linear", "polynomial", "sinusoidal"] {
        assert!(err.contains(name), "expected ramp choices in: {err}");
    }
}

#[test]
fn unknown_keys_exit_2_listing_every_key() {
    let out = qcg(&["sweep-tau", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("bogus"), "should name the offender: {err}");
    for key in ["valid keys are", "taugamma_points", "steps_per_unit", "w3"] {
        assert!(err.contains(key), "expected {key} in: {err}");
    }
}

#[test]
fn missing_config_file_exits_2() {
    let out = qcg(&["validate", "--config", "/nonexistent/qcg.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("config error"));
}

#[test]
fn json_bundles_carry_version_config_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("timing.json");
    let out = qcg(&[
        "timing",
        "eps_max=0.03",
        "format=json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let bundle: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(bundle["version"], qcg::VERSION);
    assert_eq!(bundle["scenario"], "timing_sweep");
    assert_eq!(bundle["config"]["eps_max"], "0.03");
    let records = bundle["records"].as_array().unwrap();
    // One zero row plus three signed pairs, for each of the three ramps.
    assert_eq!(records.len(), 21);
    for rec in records {
        assert_eq!(rec["protocol"], "ie");
        assert_eq!(rec["param"], "epsilon");
        assert!(rec["infidelity"].is_f64());
        assert!(rec["cost"].is_null());
    }
}

#[test]
fn bloch_paths_use_their_own_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bloch.csv");
    let out = qcg(&["bloch", "protocol=cd", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, BLOCH_CSV_HEADER);
    assert_eq!(rows.len(), 402);
    assert!(rows.iter().all(|r| r[1] == "cd"));
    let qubits: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(qubits.into_iter().collect::<Vec<_>>(), ["auxiliary", "computational"]);
}

#[test]
fn reruns_differ_only_in_runtimes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = qcg(&["cz", "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let strip = |path: &Path| -> Vec<Vec<String>> {
        let (_, mut rows) = read_csv(path);
        for row in &mut rows {
            row.pop();
        }
        rows
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn results_default_to_stdout() {
    let out = qcg(&[
        "cost",
        "protocol=ie",
        "ramp=linear",
        "tau_min=1",
        "tau_max=2",
        "tau_points=2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER);
    assert_eq!(lines.count(), 2);
}

#[test]
fn diverging_integrations_exit_1_naming_the_row() {
    let out = qcg(&[
        "dephasing",
        "protocol=cd",
        "taugamma_min=4000",
        "taugamma_max=5000",
        "taugamma_points=2",
        "steps_per_unit=1000",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("taugamma"), "row context expected in: {err}");
}
