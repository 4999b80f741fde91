//! End-to-end runs of the `eeqt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eeqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eeqt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows (no header), split into cells.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn note<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no note {key}"))
}

fn path_in(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn density_is_deterministic_and_replays_from_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let first = path_in(dir.path(), "first.csv");
    let second = path_in(dir.path(), "second.csv");
    let replay = path_in(dir.path(), "replay.csv");
    let args = ["density", "--t-max", "6", "--dt", "0.5", "--alpha", "0.5,1,2"];
    for target in [&first, &second] {
        let out = eeqt(&[&args[..], &["-o", target.to_str().unwrap()]].concat());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let out = eeqt(&[
        "density",
        "--config",
        first.to_str().unwrap(),
        "-o",
        replay.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read(&first).unwrap();
    assert_eq!(text, std::fs::read(&second).unwrap());
    assert_eq!(text, std::fs::read(&replay).unwrap());
}

#[test]
fn reference_setup_curves_are_bounded_and_zero_coupling_is_silent() {
    let out = eeqt(&["density", "--t-max", "20", "--dt", "0.5", "--alpha", "0,0.5,1,2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let header = text.lines().find(|l| l.starts_with("t,")).unwrap();
    assert_eq!(
        header,
        "t,wigner,p[alpha=0],P[alpha=0],p[alpha=0.5],P[alpha=0.5],p[alpha=1],P[alpha=1],p[alpha=2],P[alpha=2]"
    );
    for alpha in ["0.5", "1", "2"] {
        let efficiency: f64 = note(&text, &format!("efficiency[alpha={alpha}]")).parse().unwrap();
        assert!(efficiency > 0.0 && efficiency <= 1.0);
    }
    for row in rows(&text) {
        let values: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!((values[2], values[3]), (0.0, 0.0));
        for k in [5, 7, 9] {
            assert!((0.0..=1.0).contains(&values[k]));
        }
    }
}

#[test]
fn physical_units_rescale_inputs_and_outputs() {
    // η = 2: lengths ×2, times ×4, velocities ×½ relative to natural units
    let natural = stdout(&eeqt(&["density", "--t-max", "4", "--dt", "1", "--alpha", "1"]));
    let physical = stdout(&eeqt(&[
        "density", "--eta", "2", "--x0", "-16", "--v", "1", "--t-max", "16", "--dt", "4", "--alpha", "1",
    ]));
    for (n, p) in rows(&natural).iter().zip(rows(&physical)) {
        let n: Vec<f64> = n.iter().map(|c| c.parse().unwrap()).collect();
        let p: Vec<f64> = p.iter().map(|c| c.parse().unwrap()).collect();
        assert!((p[0] - 4.0 * n[0]).abs() < 1e-9);
        assert!((p[2] - n[2] / 4.0).abs() <= 1e-10 * n[2].abs().max(1e-12));
        assert_eq!(p[3], n[3]);
    }
}

#[test]
fn usage_errors_exit_with_one_and_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = path_in(dir.path(), "never.csv");
    let target_str = target.to_str().unwrap();
    assert_eq!(code(&eeqt(&["density", "--bogus"])), 1);
    assert_eq!(code(&eeqt(&["density", "--dt", "0", "-o", target_str])), 1);
    assert_eq!(code(&eeqt(&["simulate", "-n", "0", "-o", target_str])), 1);
    assert_eq!(code(&eeqt(&["optimize", "--bracket", "3,6", "-o", target_str])), 1);
    let bad_config = path_in(dir.path(), "bad.toml");
    std::fs::write(&bad_config, "[packet]\nx1 = 2\n").unwrap();
    assert_eq!(
        code(&eeqt(&[
            "density",
            "--config",
            bad_config.to_str().unwrap(),
            "-o",
            target_str
        ])),
        1
    );
    assert!(!target.exists());
    assert_eq!(
        std::fs::read_dir(dir.path()).unwrap().count(),
        1,
        "stray temporary files"
    );
    assert_eq!(code(&eeqt(&["--help"])), 0);
}

#[test]
fn thread_cap_is_validated() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_eeqt"))
            .args(["density", "--t-max", "1", "--dt", "1", "--alpha", "1"])
            .env("EEQT_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("0")), 1);
    assert_eq!(code(&run("two")), 1);
    assert_eq!(code(&run("1")), 0);
}

#[test]
fn grid_run_reports_boundary_failure_with_exit_two() {
    let out = eeqt(&[
        "grid-run",
        "--grid-width",
        "32",
        "--grid-nodes",
        "512",
        "--grid-dt",
        "0.002",
        "--t-max",
        "12",
        "--alpha",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(note(&stdout(&out), "valid"), "false");

    let out = eeqt(&["grid-run", "--t-max", "5", "--alpha", "1", "--every", "100"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let detected: f64 = note(&text, "detected").parse().unwrap();
    let closed: f64 = note(&text, "closed_form_detected").parse().unwrap();
    assert!((detected - closed).abs() <= 1e-2 * closed);
    assert_eq!(rows(&text).len(), 51);
}

#[test]
fn oracle_check_passes_and_fails_with_exit_three() {
    let out = eeqt(&["oracle-check", "--alpha", "1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(note(&text, "result"), "PASS");
    assert_eq!(rows(&text).len(), 3);

    let out = eeqt(&[
        "oracle-check",
        "--alpha",
        "1",
        "--oracle-horizon",
        "5",
        "--oracle-tol",
        "1e-12",
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(note(&stdout(&out), "result"), "FAIL");
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let args = ["simulate", "-n", "100000", "--seed", "7", "--alpha", "1"];
    let first = eeqt(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, eeqt(&args).stdout);
    let text = stdout(&first);
    assert_eq!(rows(&text).len(), 100_000);
    assert_eq!(note(&text, "ks_pass"), "true");
    let z: f64 = note(&text, "fraction_z").parse().unwrap();
    assert!(z.abs() <= 4.0);
    assert_ne!(
        first.stdout,
        eeqt(&["simulate", "-n", "100000", "--seed", "8", "--alpha", "1"]).stdout
    );
}

#[test]
fn optimize_defaults_reproduce_the_stationary_optimum() {
    let out = eeqt(&["optimize"]);
    assert_eq!(code(&out), 0);
    let row = &rows(&stdout(&out))[0];
    let alpha: f64 = row[0].parse().unwrap();
    let p: f64 = row[1].parse().unwrap();
    assert!((alpha - 1.3216).abs() <= 0.01, "alpha* = {alpha}");
    assert!((p - 0.73).abs() <= 0.01, "P* = {p}");
}

#[test]
fn efficiency_curve_and_velocity_sweep_emit_tables() {
    let out = eeqt(&[
        "efficiency-curve",
        "--x0",
        "0",
        "--v",
        "0",
        "--alpha-min",
        "0.2",
        "--alpha-max",
        "8",
        "--points",
        "9",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(rows(&text).len(), 9);
    assert_eq!(note(&text, "boundary"), "false");

    let out = eeqt(&["sweep-velocity", "--velocities", "2,4"]);
    assert_eq!(code(&out), 0);
    let rows = rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    let p_star: f64 = rows[1][2].parse().unwrap();
    assert!((p_star - 0.5).abs() <= 0.05);
}
