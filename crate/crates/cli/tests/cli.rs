use std::path::PathBuf;
use std::process::Command;

fn qmsep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmsep"))
}

fn verifier(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../verifiers").join(name)
}

fn attack_csv(dir: &tempfile::TempDir, tag: &str, jobs: &str) -> Vec<u8> {
    let out = dir.path().join(format!("{tag}.csv"));
    let status = qmsep()
        .args(["attack", "--scheme", "conjugate", "--trials", "6", "--seed", "42", "--jobs", jobs])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn attack_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = attack_csv(&dir, "a", "1");
    let b = attack_csv(&dir, "b", "1");
    let c = attack_csv(&dir, "c", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# qmsep-csv v1\nscheme,variant,seed,"));
    assert_eq!(text.lines().count(), 2 + 6);
    assert!(dir.path().join("a.json").exists());
}

#[test]
fn unknown_scheme_is_rejected() {
    let out = qmsep().args(["attack", "--scheme", "lattice"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn scaled_flag_required_for_overrides() {
    let out = qmsep().args(["attack", "--scheme", "hash-tag", "--t-max", "3", "--trials", "1"]).output().unwrap();
    assert!(!out.status.success());
    let out = qmsep()
        .args(["attack", "--scheme", "hash-tag", "--t-max", "3", "--n-updates", "4", "--scaled", "--trials", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains(",3,4,"));
}

#[test]
fn oracle_check_exit_codes() {
    let ok = qmsep().args(["oracle-check", "--l", "1", "--queries", "3", "--trials", "3"]).output().unwrap();
    assert!(ok.status.success());
    let bad = qmsep()
        .args(["oracle-check", "--l", "1", "--queries", "3", "--trials", "3", "--inject-fault", "skip-df-deletion"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL"));
}

#[test]
fn synth_reports_both_backends() {
    let out = qmsep().arg("synth").arg("--verifier").arg(verifier("accept_all.json")).args(["--trials", "5"]).output().unwrap();
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for b in r["backends"].as_array().unwrap() {
        assert_eq!(b["acceptance"]["mean"].as_f64().unwrap(), 1.0);
    }
    let out = qmsep().arg("synth").arg("--verifier").arg(verifier("reject_all.json")).args(["--trials", "5"]).output().unwrap();
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["backends"][0]["fallback_rate"].as_f64().unwrap(), 1.0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"attack": {"scheme": "hash-tag", "trials": 2, "seed": 5}}"#).unwrap();
    let out = qmsep().arg("--config").arg(&cfg).args(["attack", "--trials", "3"]).output().unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2 + 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("hash-tag,classical_mint,5,"));
}
