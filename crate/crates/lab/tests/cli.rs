use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbf_advect::advection::initial_condition;
use rbf_advect_lab::io::read_points_csv;
use rbf_advect_lab::Manifest;

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbf-lab"))
        .args(args)
        .current_dir(dir)
        .env("RBF_LOG", "error")
        .output()
        .expect("spawn rbf-lab")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lab(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn csv_rows(p: impl AsRef<Path>) -> Vec<Vec<f64>> {
    let text = String::from_utf8(read(p)).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn nodes_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["nodes", "--domain", "star", "--h", "0.08", "--seed", "1"]);
    let (x, b) = read_points_csv(&d.join("X.csv")).unwrap();
    assert!((360..=440).contains(&x.len()), "N = {}", x.len());
    assert!(b.iter().any(|&v| v) && b.iter().any(|&v| !v));
    assert!(!d.join("Y.csv").exists());
    let first = read(d.join("X.csv"));

    ok(d, &["nodes", "--domain", "star", "--h", "0.08", "--seed", "1", "--q", "4", "--perturb", "0.3", "--out", "a/X.csv", "--out-eval", "a/Y.csv"]);
    ok(d, &["nodes", "--domain", "star", "--h", "0.08", "--seed", "1", "--q", "4", "--perturb", "0.3", "--out", "b/X.csv", "--out-eval", "b/Y.csv"]);
    for f in ["X.csv", "Y.csv"] {
        assert_eq!(read(d.join("a").join(f)), read(d.join("b").join(f)), "{f}");
    }
    ok(d, &["nodes", "--domain", "star", "--h", "0.08", "--seed", "1"]);
    assert_eq!(read(d.join("X.csv")), first);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(lab(d, &["nodes", "--domain", "star"]).status.code(), Some(2));
    assert_eq!(lab(d, &["nodes", "--h", "-0.1"]).status.code(), Some(2));
    assert_eq!(lab(d, &["spectrum", "--method", "fd", "--p", "2", "--h", "0.1"]).status.code(), Some(2));
    write_config(d, "bad.json", r#"{"method":"rbf","h":0.1,"p":2,"cfl":0.5,"t_final":0}"#);
    assert_eq!(lab(d, &["solve", "--config", "bad.json"]).status.code(), Some(2));
    write_config(d, "pen.json", r#"{"method":"kansa","h":0.1,"p":2,"cfl":0.5,"t_final":0,"penalty":true}"#);
    let out = lab(d, &["solve", "--config", "pen.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("penalty"));
    assert_eq!(lab(d, &["solve", "--config", "missing.json"]).status.code(), Some(1));
}

#[test]
fn solve_to_time_zero_returns_the_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "c.json", r#"{"method":"fd","h":0.08,"q":4,"p":3,"cfl":0.3,"t_final":0,"penalty":true}"#);
    ok(d, &["solve", "--config", "c.json", "--out-dir", "out"]);
    let rows = csv_rows(d.join("out/solution.csv"));
    assert!(rows.len() > 300);
    for r in &rows {
        assert_eq!(r[2], initial_condition([r[0], r[1]]));
    }
    let energy = csv_rows(d.join("out/energy.csv"));
    assert_eq!(energy, vec![vec![0.0, 1.0]]);
    let m = Manifest::read(&d.join("out/solve.manifest.json")).unwrap();
    assert_eq!(m.config["run"]["n"], 20);
    assert_eq!(m.outputs.len(), 2);
}

#[test]
fn stable_run_writes_energy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "c.json", r#"{"method":"fd","h":0.08,"q":9,"p":4,"cfl":0.2,"t_final":0.5,"penalty":true}"#);
    ok(d, &["solve", "--config", "c.json"]);
    let energy = csv_rows(d.join("energy.csv"));
    assert!(energy.len() > 10);
    assert_eq!(energy[0], vec![0.0, 1.0]);
    assert!((energy.last().unwrap()[0] - 0.5).abs() < 1e-12);
    for r in &energy {
        assert!(r[1] <= 1.0 + 1e-3 && r[1] > 0.8, "ratio {}", r[1]);
    }
}

#[test]
fn unstable_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "c.json", r#"{"method":"fd","h":0.04,"q":1,"p":2,"cfl":0.5,"t_final":20}"#);
    let out = lab(d, &["solve", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("diverged at t="), "{err}");
    let last = csv_rows(d.join("energy.csv")).pop().unwrap();
    assert!(last[1] > 1e8 && last[0] < 20.0);
}

#[test]
fn jumps_of_the_global_stencil_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["jumps1d", "--p", "4", "--N", "40", "--n", "12,18,24,40"]);
    assert!(out.contains("N = 40, n = 40: max jump 0.000000e0"), "{out}");
    let rows = csv_rows(d.join("jumps1d.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows[0][3] > rows[1][3] && rows[1][3] > rows[2][3]);
    assert_eq!(lab(d, &["jumps1d", "--p", "4", "--N", "40", "--n", "41"]).status.code(), Some(2));
}

#[test]
fn unstabilized_fd_spectrum_has_unstable_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["spectrum", "--method", "fd", "--p", "2", "--n", "12", "--q", "5", "--h", "0.06", "--cfl", "0.3"]);
    let m = Manifest::read(&d.join("spectrum.manifest.json")).unwrap();
    assert!(m.results["spectra"][0]["unstable"].as_u64().unwrap() > 0);
    let rows = csv_rows(d.join("spectrum.csv"));
    let flagged = rows.iter().filter(|r| r[2] == 0.0).count() as u64;
    assert_eq!(flagged, m.results["spectra"][0]["unstable"].as_u64().unwrap());
    let svg = String::from_utf8(read(d.join("spectrum.svg"))).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert_eq!(svg.matches("<circle").count(), rows.len());
}

#[test]
fn quadrature_writes_a_series_per_kind_and_integrand() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quadrature", "--kind", "cartesian,halton", "--f", "gaussian,constant", "--hy", "0.05,0.035,0.025", "--jobs", "2"]);
    let text = String::from_utf8(read(d.join("quadrature.csv"))).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
    for line in text.lines().filter(|l| l.starts_with("constant")) {
        let e: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(e < 1e-12, "{line}");
    }
    let m = Manifest::read(&d.join("quadrature.manifest.json")).unwrap();
    assert_eq!(m.results["series"].as_array().unwrap().len(), 4);
}

#[test]
fn export_writes_consistent_coordinate_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["export", "--method", "fd", "--p", "2", "--h", "0.1", "--q", "4", "--penalty", "--edges"]);
    let text = String::from_utf8(read(d.join("P.coo"))).unwrap();
    let mut lines = text.lines();
    let head: Vec<usize> = lines.next().unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert_eq!(head[0], head[1]);
    let entries: Vec<(usize, usize, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(entries.len(), head[2]);
    let mut dense = vec![0.0; head[0] * head[0]];
    for &(i, j, v) in &entries {
        dense[i * head[0] + j] = v;
    }
    for i in 0..head[0] {
        for j in 0..i {
            let (a, b) = (dense[i * head[0] + j], dense[j * head[0] + i]);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
    let (x, _) = read_points_csv(&d.join("X.csv")).unwrap();
    assert_eq!(x.len(), head[0]);
    let edges = csv_rows(d.join("edges.csv"));
    let j_rows: usize = String::from_utf8(read(d.join("J.coo"))).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert_eq!(edges.len(), j_rows);
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["spectrum", "--method", "kansa", "--p", "3", "--h", "0.12", "--q", "1,3", "--cfl", "0.3", "--out-dir", "a", "--jobs", "2"]);
    ok(d, &["rerun", "a/spectrum.manifest.json", "--out-dir", "b"]);
    let a = Manifest::read(&d.join("a/spectrum.manifest.json")).unwrap();
    let b = Manifest::read(&d.join("b/spectrum.manifest.json")).unwrap();
    assert_eq!(a.outputs.len(), 4);
    assert_eq!(a.results, b.results);
    for (pa, pb) in a.outputs.iter().zip(&b.outputs) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(read(d.join(pa)), read(d.join(pb)), "{}", pa.display());
    }

    ok(d, &["maxcfl", "--method", "kansa", "--p", "3", "--h", "0.12", "--q", "2,3", "--out-dir", "c"]);
    ok(d, &["rerun", "c/maxcfl.manifest.json", "--out-dir", "e"]);
    assert_eq!(read(d.join("c/maxcfl.csv")), read(d.join("e/maxcfl.csv")));
}
