use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmis")).args(args).output().expect("binary runs")
}

const SMALL: &str = "\
seed = 7
workers = 2
prime_lengths = [3, 5]
single_site_max_l = 6
bound_calibration = [6]
bound_lengths = [6, 7]
ose_lengths = [6, 8]
swssb_lengths = [5, 7]
lindblad_sites = 4
t_max = 1.0
fit_window = [0.5, 1.0]
";

fn report(dir: &Path, config: &str, only: &str) -> Output {
    let cfg = dir.join("campaign.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    mmis(&[
        "report",
        "--config",
        cfg.to_str().unwrap(),
        "--only",
        only,
        "--out-dir",
        out.to_str().unwrap(),
    ])
}

#[test]
fn same_seed_gives_identical_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let only = "1,4,5,7,10,11,12";
    report(a.path(), SMALL, only);
    report(b.path(), SMALL, only);
    for name in ["table-s1.csv", "correlators.csv", "ose.csv", "swssb.csv", "trajectory.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(!x.is_empty(), "{name} missing");
        assert_eq!(x, y, "{name} differs between runs");
    }
    let traj = fs::read_to_string(a.path().join("out/trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,F,one_minus_F,"));
    assert!(traj.lines().count() > 5);
}

#[test]
fn passing_subset_exits_zero_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = report(dir.path(), "", "1,2,8,13");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["all_passed"], true);
    assert_eq!(summary["checks"].as_array().unwrap().len(), 4);
    assert!(summary["fidelity_convention"].as_str().unwrap().contains("non-squared"));
    assert_eq!(summary["files"]["trajectory.csv"][1], "F");
}

#[test]
fn guard_violation_exits_two_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = report(dir.path(), "lindblad_sites = 12\n", "12");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("criterion 12"), "{err}");
    assert!(err.contains("exceeds the limit"), "{err}");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = report(dir.path(), SMALL, "11");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("FAIL [11]"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = report(dir.path(), "sedd = 3\n", "1");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("sedd"));
}

#[test]
fn dims_as_json() {
    let out = mmis(&["--format", "json", "dims", "--l-max", "6"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let t: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["dim_t"].as_u64().unwrap()).collect();
    assert_eq!(t, vec![2, 3, 4, 6, 8, 14]);
}

#[test]
fn module_commands_print_csv() {
    for args in [
        vec!["mmis", "-L", "4"],
        vec!["correlators", "-L", "5"],
        vec!["umps-span", "-L", "4"],
        vec!["ose", "-L", "6"],
        vec!["swssb", "--lengths", "3,5"],
        vec!["lindblad", "-L", "3", "--t-max", "0.2"],
    ] {
        let out = mmis(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().lines().count() >= 2, "{args:?}");
    }
}

#[test]
fn direct_guard_error_exits_two() {
    let out = mmis(&["lindblad", "-L", "11"]);
    assert_eq!(out.status.code(), Some(2));
}
