use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vortexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const TRIVIAL: &str = r#"
seed = 1
epsilon = [0.3]
[geometry]
sites = [8, 8]
lengths = [1.0, 1.0]
[bundle]
chern = [[0, 0], [0, 0]]
"#;

const ONE_VORTEX: &str = r#"
seed = 1
epsilon = [0.2]
[geometry]
sites = [16, 16]
lengths = [1.0, 1.0]
[bundle]
chern = [[0, 1], [-1, 0]]
"#;

#[test]
fn trivial_minimize_exits_zero_with_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TRIVIAL);
    let out = dir.path().join("out");
    let o = vortexlab(&["minimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    let total: f64 = summary.lines().find_map(|l| l.strip_prefix("total = ")).unwrap().parse().unwrap();
    assert!(total < 1e-12);
    for f in ["section.dump", "gauge.dump", "curvature.dump", "density.dump", "vorticity.txt", "bundle.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let used = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(used.contains("seed = 1"), "{used}");
}

#[test]
fn one_vortex_gives_one_triple() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_VORTEX);
    let out = dir.path().join("out");
    let o = vortexlab(&["minimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let vort = fs::read_to_string(out.join("vorticity.txt")).unwrap();
    let lines: Vec<&str> = vort.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(" 1"));
}

#[test]
fn zero_epsilon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TRIVIAL.replace("epsilon = [0.3]", "epsilon = [0.0]"));
    let o = vortexlab(&["minimize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon > 0"));
}

#[test]
fn iteration_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{ONE_VORTEX}[optimizer]\nmax_iter = 2\n"));
    let o = vortexlab(&["minimize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let body = ONE_VORTEX.replace("epsilon = [0.2]", "epsilon = [0.3, 0.2, 0.15]");
    let cfg = write_config(dir.path(), &body);
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = vortexlab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables[0].clone()).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("epsilon,G_total,G_over_log_eps"));
    for r in &rows[1..] {
        assert_eq!(r.split(',').nth(7), Some("1"));
    }
}

#[test]
fn trivial_sweep_has_zero_mass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TRIVIAL.replace("epsilon = [0.3]", "epsilon = [0.4, 0.3]"));
    let o = vortexlab(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for r in text.lines().skip(1) {
        let mass: f64 = r.split(',').nth(6).unwrap().parse().unwrap();
        assert_eq!(mass, 0.0);
    }
}

#[test]
fn selftest_passes() {
    let o = vortexlab(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn hodge_test_passes() {
    let o = vortexlab(&["hodge-test"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1 + 3 + 4);
}

#[test]
fn ansatz_reports_one_vortex() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_VORTEX);
    let o = vortexlab(&["ansatz", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("vortex_count = 1"));
}
