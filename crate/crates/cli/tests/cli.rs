use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn phfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phfem")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn square_dir() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../meshes/unit_square")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn topology_table() {
    let out = phfem(&["topology", "--mesh", &square_dir()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "edge,node_a,node_b,t_plus,t_minus,length,kind");
    assert_eq!(rows.len(), 9);
    assert!(rows[1].starts_with("1,1,2,1,0,1.0"));
    assert!(rows[5].starts_with("5,5,1,1,2,"));
}

#[test]
fn refine_writes_readable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("level2");
    let o = phfem(&["refine", "--mesh", &square_dir(), "--levels", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let elements = fs::read_to_string(out.join("elements.dat")).unwrap();
    assert_eq!(elements.lines().count(), 64);
    let o = phfem(&["topology", "--mesh", out.to_str().unwrap()]);
    assert!(o.status.success());
    // 41 nodes and 64 elements give 41 + 64 - 1 edges
    assert_eq!(stdout(&o).lines().count(), 1 + 104);
}

#[test]
fn elliptic_convergence_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = phfem(&["convergence", "--problem", "elliptic-poly", "--levels", "1..5", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // level, nE, h, h1, l2, m, orders, residual
    assert_eq!(last[0], 5.0);
    assert_eq!(last[1], 4096.0);
    assert!((last[6] - 1.0006).abs() < 5e-4, "{last:?}");
    assert!((last[7] - 2.0020).abs() < 5e-4, "{last:?}");
    assert!((last[8] - 0.9963).abs() < 5e-4, "{last:?}");
    assert!(dir.path().join("timings.csv").exists());
    assert!(stdout(&o).contains("problem: elliptic-poly"));

    let again = tempfile::tempdir().unwrap();
    let o = phfem(&["convergence", "--levels", "1..5", "--out", again.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(csv, fs::read_to_string(again.path().join("convergence.csv")).unwrap());
}

#[test]
fn parabolic_study_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(&cfg, "problem = \"parabolic-poly\"\nlevels = \"1..3\"\nt_end = 1.0\nout = \"results\"\n").unwrap();
    let o = phfem(&["convergence", "--config", cfg.to_str().unwrap(), "--levels", "1..2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("results/convergence.csv")).unwrap();
    assert!(csv.starts_with("level,nE,h,k,t_end,steps,"));
    // flag overrides the file's level range
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn solve_parabolic_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("solution");
    let o = phfem(&[
        "solve-parabolic",
        "--levels",
        "1",
        "--k",
        "0.25",
        "--t-end",
        "1",
        "--time-origin",
        "zero",
        "--export-solution",
        export.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..6], &["1", "16", "5e-1", "2.5e-1", "1e0", "4"]);
    let elements = fs::read_to_string(export.join("elements.csv")).unwrap();
    assert_eq!(elements.lines().count(), 17);
    let multipliers = fs::read_to_string(export.join("multipliers.csv")).unwrap();
    assert!(multipliers.starts_with("multiplier,edge,node_a,node_b,lambda\n"));
}

#[test]
fn solve_elliptic_with_coefficient_overrides() {
    let o = phfem(&["solve-elliptic", "--levels", "2", "--p", "-1,0.5", "--delta", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("level,nE,h,h1_error"));
    assert_eq!(phfem(&["solve-elliptic", "--p", "1,2,3"]).status.code(), Some(2));
    // indefinite diffusion tensor
    assert_eq!(phfem(&["solve-elliptic", "--a", "1,0,0,-1"]).status.code(), Some(2));
}

#[test]
fn benchmark_single_level() {
    let o = phfem(&["bench", "--levels", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("slope undefined"));
}

#[test]
fn exit_codes() {
    // empty level range
    assert_eq!(phfem(&["convergence", "--levels", "3..1"]).status.code(), Some(2));
    assert_eq!(phfem(&["convergence", "--problem", "nope"]).status.code(), Some(2));
    assert_eq!(phfem(&["solve-elliptic", "--problem", "parabolic-poly"]).status.code(), Some(2));
    assert_eq!(phfem(&["solve-parabolic", "--k", "0"]).status.code(), Some(2));
    // k does not divide t_end
    assert_eq!(phfem(&["solve-parabolic", "--k", "0.3"]).status.code(), Some(2));
    assert_eq!(phfem(&["topology", "--mesh", "/nonexistent/mesh"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("coordinates.dat"), "0 0\n1 0\n0 1\n").unwrap();
    fs::write(dir.path().join("elements.dat"), "1 3 2\n").unwrap();
    assert_eq!(phfem(&["topology", "--mesh", dir.path().to_str().unwrap()]).status.code(), Some(3));
    // a residual bound no solve can meet
    assert_eq!(
        phfem(&["solve-elliptic", "--levels", "1", "--tolerance", "1e-300"]).status.code(),
        Some(4)
    );
}
