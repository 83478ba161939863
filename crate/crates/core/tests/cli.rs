use std::path::Path;
use std::process::Command;

fn eqmm(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_eqmm")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn short_config(dir: &Path) -> String {
    let base = include_str!("../../../configs/desk.toml");
    let mut cfg: toml::Table = toml::from_str(base).unwrap();
    cfg.entry("market").or_insert_with(|| toml::Value::Table(Default::default())).as_table_mut().unwrap().insert("close_secs".into(), 600.into());
    let path = dir.join("short.toml");
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let line = eqmm(&["run", "--config", &cfg, "--seed", "4", "--out", a.to_str().unwrap()]);
    assert!(line.starts_with("seed=4 "));
    eqmm(&["run", "--config", &cfg, "--seed", "4", "--out", b.to_str().unwrap()]);
    for f in ["episode.csv", "steps.csv", "returns.csv", "quotes.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn stats_reads_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    std::fs::write(&path, "a,b\n0,1\n1,3\n2,5\nx,7\n").unwrap();
    let out = eqmm(&["stats", "--input", path.to_str().unwrap(), "--x", "a", "--y", "b"]);
    let fields: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields, vec![3.0, 1.0, 2.0, 1.0]);
}

#[test]
fn stats_rejects_constant_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    std::fs::write(&path, "a,b\n1,1\n1,3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_eqmm")).args(["stats", "--input", path.to_str().unwrap(), "--x", "a", "--y", "b"]).output().unwrap();
    assert!(!out.status.success());
}
