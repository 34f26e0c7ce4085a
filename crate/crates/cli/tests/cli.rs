//! End-to-end runs of the `walllaw` binary on cheap configurations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn walllaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walllaw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const FLAT: &str = r#"
[profile]
kind = "flat"
delta = 0.05

[cell]
height = 6.0
refinements = 0
sweep = [4.0, 6.0]

[mesh]
refinements = 0
"#;

#[test]
fn mesh_export_writes_a_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = walllaw(&["--out", &out, "mesh", "--kind", "rough", "--epsilon", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("rough_eps0.3.mesh");
    assert!(fs::metadata(&path).unwrap().len() > 0);
    assert!(stdout(&o).contains("checksum"));
}

#[test]
fn bad_epsilon_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = walllaw(&["--out", &out, "mesh", "--epsilon", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn short_epsilon_list_fails_before_any_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[problem]\nepsilons = [0.5, 0.4, 0.3]\n");
    let out = dir.path().join("out").to_string_lossy().into_owned();
    let o = walllaw(&["--config", &cfg, "--out", &out, "experiment"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("epsilon"), "{}", stderr(&o));
    assert!(!dir.path().join("out").join("errors.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[cell]\nheigth = 10.0\n");
    let o = walllaw(&["--config", &cfg, "cell"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cell_then_verify_on_a_flat_wall() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();

    let o = walllaw(&["--config", &cfg, "--out", &out_s, "cell"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let beta_bar: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("beta_bar="))
        .expect("beta_bar line")
        .trim()
        .parse()
        .unwrap();
    assert!((beta_bar - 0.05).abs() < 1e-8, "{text}");
    for f in ["beta.field", "gamma.field", "traces.dat", "decay.dat", "sweep.dat"] {
        assert!(out.join("cell").join(f).exists(), "missing {f}");
    }

    let field = out.join("cell").join("beta.field");
    let field_s = field.to_string_lossy().into_owned();
    let o = walllaw(&["--config", &cfg, "--out", &out_s, "verify", "--quick", "--field", &field_s]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains(" 0 failed"), "{}", stdout(&o));

    let text = fs::read_to_string(&field).unwrap();
    let corrupted = dir.path().join("corrupted.field");
    fs::write(&corrupted, text.replacen("mesh ", "mesh 00", 1)).unwrap();
    let corrupted_s = corrupted.to_string_lossy().into_owned();
    let o = walllaw(&["--config", &cfg, "--out", &out_s, "verify", "--quick", "--field", &corrupted_s]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"), "{}", stdout(&o));
}
