use std::path::Path;
use std::process::{Command, Output};

fn optonoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optonoise")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn steady_prints_header_and_one_row_per_branch() {
    let out = optonoise(&["steady", "--correlation-rate-hz", "1e6", "--detuning-hz", "40e6", "--power", "0.1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("point_index,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_path = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(
            "correlation_rate_hz = 1e6\npower = 0.01\naxis1 = detuning_hz 1e6 3e7 4\nformat = json\noutput = {}\n",
            out_path.display()
        ),
    )
    .unwrap();
    let out = optonoise(&["sweep", "--config", cfg.to_str().unwrap(), "--power", "0.02"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let arr = value.as_array().unwrap();
    assert_eq!(arr.len(), 4);
    assert!(arr.iter().all(|r| r["power"].as_f64() == Some(0.02)));
}

#[test]
fn exit_codes() {
    // Configuration problems.
    assert_eq!(code(&optonoise(&["steady"])), 1);
    assert_eq!(code(&optonoise(&["steady", "--correlation-rate-hz", "abc"])), 1);
    assert_eq!(code(&optonoise(&["steady", "--nonsense"])), 1);
    assert_eq!(code(&optonoise(&["fig3", "--correlation-rate-hz", "100"])), 1);
    // I/O problems.
    assert_eq!(code(&optonoise(&["sweep", "--config", "/definitely/not/here.cfg"])), 2);
    let out = optonoise(&["steady", "--correlation-rate-hz", "1e6", "-o", "/definitely/not/here.csv"]);
    assert_eq!(code(&out), 2);
    // Help is not an error.
    assert_eq!(code(&optonoise(&["--help"])), 0);
}

#[test]
fn check_passes() {
    let out = optonoise(&["check"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn fig1_has_two_branch_ends() {
    let out = optonoise(&["fig1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("direction,power,photon_number,branch_index,eta,stable,terminal"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 2);
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let out = optonoise(&[
            "fig2",
            "--correlation-rate-hz",
            "1e6",
            "--workers",
            workers,
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        std::fs::read(Path::new(&path)).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("1", "b.csv");
    let c = run("6", "c.csv");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn fig3_writes_raster_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let raster = dir.path().join("raster.csv");
    let records = dir.path().join("records.csv");
    let out = optonoise(&[
        "fig3",
        "--correlation-rate-hz",
        "100",
        "--temperature",
        "0.4",
        "--linewidths",
        "0,100",
        "--axis1",
        "detuning_hz 5e6 4e7 8",
        "--axis2",
        "power 1e-3 0.3 20 log",
        "--eta-bins",
        "10",
        "--detuning-bins",
        "5",
        "-o",
        raster.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&raster).unwrap();
    assert!(text.starts_with("linewidth_hz,eta_lo,eta_hi,detuning_lo,detuning_hi,max_log_negativity"));
    assert_eq!(text.lines().count(), 1 + 2 * 10 * 5);
    assert!(std::fs::metadata(&records).unwrap().len() > 0);
}
