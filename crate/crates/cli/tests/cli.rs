use std::fs;
use std::process::Command;

fn fdsec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdsec"))
}

#[test]
fn default_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdsec().arg("default-config").output().unwrap();
    assert!(out.status.success());
    let path = dir.path().join("cell.toml");
    fs::write(&path, &out.stdout).unwrap();
    let cfg = fdsec::scenario::SystemConfig::load(&path).unwrap();
    assert_eq!(cfg, fdsec::scenario::SystemConfig::desk_scale());
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let status = fdsec()
        .args(["outage-vs-dl-sinr", "--trials", "1", "--seed", "12", "--points", "0,12", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("records-01.csv")).unwrap();
    assert!(csv.starts_with("seed,scheme,lambda1,status,"));
    assert!(csv.contains("12,proposed,0.1,optimal,"));
    assert!(out.join("summary.json").exists());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "k = 0\n").unwrap();
    let status = fdsec()
        .args(["tradeoff", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert!(!status.success());

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = fdsec()
        .args(["power-vs-kappa", "--trials", "1", "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
