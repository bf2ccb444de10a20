use std::path::Path;
use std::process::Command;

use kirchhoff::cli::main_with_args;
use kirchhoff::fiber::degenerate_point;
use kirchhoff::snapshot::read_snapshot;
use kirchhoff::space::fiber_scalars;
use kirchhoff::sweep::CSV_HEADER;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["kirchhoff"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let exe = env!("CARGO_BIN_EXE_kirchhoff");
    let o = Command::new(exe)
        .args(["--config", "/definitely/not/here.conf", "verify"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[missing-file]:"), "{err}");
    assert!(err.contains("/definitely/not/here.conf"));
}

#[test]
fn negative_tolerance_is_a_config_error_before_any_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "tolerances.residual = -1e-8\n");
    let (code, stdout, err) = run(&["--config", &cfg, "--out", out.to_str().unwrap(), "verify"]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    assert!(err.starts_with("error[config]:"), "{err}");
    assert!(err.contains("tolerances.residual"), "{err}");
    // nothing was computed, so nothing was written
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem.b = 1\n");
    let (code, _, err) = run(&["--config", &cfg, "extremal"]);
    assert_eq!(code, 2);
    assert!(err.contains("problem.b"), "{err}");
}

#[test]
fn missing_snapshot_is_a_single_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "fiber",
        "--snapshot",
        "/no/such.snap",
    ]);
    assert_ne!(code, 0);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[missing-file]:"));
}

#[test]
fn sweep_with_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "space.n = 49\nsweep.count = 2\nsweep.lambda_min = 0.5\nsweep.lambda_max = 1.2\n",
    );
    let (code, stdout, err) = run(&["--config", &cfg, "--out", out.to_str().unwrap(), "sweep"]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    // the second row lies above lambda*
    assert!(lines[2].contains(",infeasible,"), "{}", lines[2]);
    assert!(stdout.contains("nonexistence"));
    for f in [
        "branch_min.dat",
        "branch_mp.dat",
        "bifurcation.gp",
        "sweep.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "space.n = 49\nsweep.count = 6\n");
    let csv = |sub: &str| {
        let out = dir.path().join(sub);
        let (code, _, err) = run(&["--config", &cfg, "--out", out.to_str().unwrap(), "sweep"]);
        assert_eq!(code, 0, "{err}");
        std::fs::read(out.join("sweep.csv")).unwrap()
    };
    assert_eq!(csv("a"), csv("b"));
}

#[test]
fn fiber_classes_around_lambda_star() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["--out", out, "extremal"]);
    assert_eq!(code, 0, "{err}");
    let snap = dir.path().join("maximizer.snap");
    let snap_s = snap.to_str().unwrap();
    let class_at = |scale: &str| {
        let (code, stdout, err) = run(&[
            "--out",
            out,
            "fiber",
            "--snapshot",
            snap_s,
            "--lambda-scale",
            scale,
        ]);
        assert_eq!(code, 0, "{err}");
        let line = stdout
            .lines()
            .find(|l| l.starts_with("class"))
            .unwrap()
            .to_owned();
        (line.split_whitespace().nth(1).unwrap().to_owned(), stdout)
    };
    assert_eq!(class_at("0.9").0, "two-critical");
    assert_eq!(class_at("1.1").0, "monotone");
    let (class, stdout) = class_at("1");
    assert_eq!(class, "degenerate");

    let s = read_snapshot(&snap).unwrap();
    let expected = degenerate_point(&s.params, &fiber_scalars(&s.field, s.params.gamma).unwrap());
    let t_deg: f64 = stdout
        .lines()
        .find(|l| l.starts_with("t_deg"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((t_deg - expected).abs() <= 1e-12 * expected);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("extremal.json")).unwrap())
            .unwrap();
    let (ls, l0) = (
        json["lambda_star"].as_f64().unwrap(),
        json["lambda0_star"].as_f64().unwrap(),
    );
    assert!((l0 / ls - 8.0 / 9.0).abs() <= 1e-15);
}

#[test]
fn seed_flag_changes_only_seeded_output() {
    let dir = tempfile::tempdir().unwrap();
    let json = |seed: &str| {
        let out = dir.path().join(seed);
        let (code, _, err) = run(&["--out", out.to_str().unwrap(), "--seed", seed, "extremal"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("extremal.json")).unwrap())
                .unwrap();
        v
    };
    let (a, b) = (json("1"), json("2"));
    assert_eq!(a["lambda_star"], b["lambda_star"]);
    assert_eq!(a["seeded_restart"]["seed"], 1);
    assert_eq!(b["seeded_restart"]["seed"], 2);
    assert_eq!(a["seeded_restart"]["same_maximizer"], true);
}

#[test]
fn limit_and_asym_write_their_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, err) = run(&["--out", out, "limit"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("shooting"));
    let limit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("limit.json")).unwrap())
            .unwrap();
    assert!(limit["c0"].as_f64().unwrap() > 0.0);
    assert!(limit["shooting_diff"].as_f64().unwrap() <= 1e-6);
    assert!(read_snapshot(&dir.path().join("limit.snap")).is_ok());

    let (code, _, err) = run(&["--out", out, "asym"]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("asym.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
