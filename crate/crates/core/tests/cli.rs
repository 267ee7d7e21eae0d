use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redfield-aqc")).args(args).output().unwrap()
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn calibrate_schedule_records_linear() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["calibrate-schedule", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("# figure schedule: linear"), "{manifest}");
    assert!(manifest.contains("t_max_multiplier = 1.0"));
}

#[test]
fn manifest_round_trip_is_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--set", "n=5", "--set", "eta=[0.05, 0.1]", "--set", "t_points=3"];
    let mut first = vec!["sweep-time", "--out", a.path().to_str().unwrap()];
    first.extend(args);
    assert!(bin(&first).status.success());
    let manifest = a.path().join("manifest.toml");
    let out = bin(&["--config", manifest.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = |d: &Path| fs::read_to_string(d.join("sweep_time.csv")).unwrap();
    assert_eq!(csv(a.path()), csv(b.path()));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let out = bin(&[
            "sweep-detuning",
            "--set",
            "n=4",
            "--set",
            "delta_l_points=4",
            "--jobs",
            jobs,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let csv = |d: &Path| fs::read_to_string(d.join("sweep_detuning.csv")).unwrap();
    assert_eq!(csv(a.path()), csv(b.path()));
}

#[test]
fn unknown_key_suggests_spelling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "subcommand = \"sweep-time\"\nomega_C = 0.25\n").unwrap();
    let out = bin(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did you mean \"omega_c\""));
}

#[test]
fn invalid_eta_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["sweep-time", "--set", "eta=-0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn minimal_config_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "subcommand = \"sweep-time\"\nn = 10\nbath = \"thermal\"\neta = [0.05]\nomega_c = 0.25\n",
    )
    .unwrap();
    // Shrink the grid so the test stays quick; the config itself is the minimal one.
    let out = bin(&[
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "t_points=1",
        "--set",
        "t_min_fraction=1",
        "--set",
        "t_max=20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn divergence_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "simulate",
        "--set",
        "n=4",
        "--set",
        "t=50",
        "--set",
        "eta=1e6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let out = bin(&["gapmap", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn gapmap_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "gapmap",
        "--set",
        "s_points=9",
        "--set",
        "omega_points=4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = body(&dir.path().join("gapmap.csv")).lines().count() - 1;
    assert_eq!(rows, 9 * 4 + 9);
}

#[test]
fn closed_simulation_matches_sweep_baseline() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--set", "n=6", "--set", "t_max=80"];
    let mut sim = vec!["simulate", "--set", "eta=0", "--out", a.path().to_str().unwrap()];
    sim.extend(common);
    assert!(bin(&sim).status.success());
    let mut sweep = vec![
        "sweep-time",
        "--set",
        "t_points=1",
        "--set",
        "t_min_fraction=1",
        "--out",
        b.path().to_str().unwrap(),
    ];
    sweep.extend(common);
    assert!(bin(&sweep).status.success());
    let p0 = column(&a.path().join("trajectory.csv"), "p0").pop().unwrap();
    let sweep_csv = b.path().join("sweep_time.csv");
    let modes = column(&sweep_csv, "mode");
    let success = column(&sweep_csv, "success");
    let closed = modes.iter().position(|m| m == "closed").unwrap();
    assert_eq!(p0, success[closed]);
}

#[test]
fn trajectory_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "simulate",
        "--set",
        "n=4",
        "--set",
        "t=30",
        "--set",
        "bath=structured",
        "--set",
        "samples=10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(!text.contains('\r'));
    let (meta, rest): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    for key in ["code_version", "n", "eta", "omega0", "delta_l", "phase_sign", "step", "flagged"] {
        assert!(meta.iter().any(|l| l.starts_with(&format!("# {key}="))), "missing {key}");
    }
    assert_eq!(rest[0], "t,s,alpha,p0,rho_x,rho_y,rho_z,purity");
    assert!(rest.len() > 10);
    let first: Vec<&str> = rest[1].split(',').collect();
    assert_eq!(first[3], "1.0000000000000000e0");
    let times: Vec<f64> = rest[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*times.last().unwrap(), 30.0);
}

#[test]
fn help_lists_config_keys() {
    let out = bin(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["omega_c", "phase_sign", "t_max_multiplier", "Exit codes"] {
        assert!(text.contains(key), "{key}");
    }
}
