//! CSV, COO and JSON writers. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use rbf_advect::analysis::{ConvergenceRow, QuadratureSeries, SpectrumReport};
use rbf_advect::advection::EnergyTrace;
use rbf_advect::linalg::Matrix;
use rbf_advect::voronoi::VoronoiDiagram;
use rbf_advect::{Point, PointSet};

use crate::{LabError, Result};

/// Rows kept in `energy.csv`.
pub const ENERGY_ROWS: usize = 2000;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    }
    std::fs::write(path, text).map_err(LabError::io(path))
}

pub fn points_csv(ps: &PointSet) -> String {
    let mut s = String::from("x,y,boundary\n");
    for (p, &b) in ps.points.iter().zip(&ps.boundary) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), b as u8);
    }
    s
}

/// Parses a file written by [`points_csv`].
pub fn read_points_csv(path: &Path) -> Result<(Vec<Point>, Vec<bool>)> {
    let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
    let bad = |line: usize| LabError::config(format!("{}:{}: expected x,y,boundary", path.display(), line + 1));
    let mut pts = Vec::new();
    let mut bnd = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad(k));
        }
        let x: f64 = f[0].trim().parse().map_err(|_| bad(k))?;
        let y: f64 = f[1].trim().parse().map_err(|_| bad(k))?;
        pts.push([x, y]);
        bnd.push(f[2].trim() == "1");
    }
    Ok((pts, bnd))
}

/// Header `rows cols nnz`, then one `i j v` line per stored entry, 0-based.
pub fn coo(m: &Matrix) -> String {
    let mut body = String::new();
    let mut nnz = 0;
    for i in 0..m.rows() {
        for (j, v) in m.row_entries(i) {
            if v != 0.0 {
                let _ = writeln!(body, "{i} {j} {}", fmt_f64(v));
                nnz += 1;
            }
        }
    }
    format!("{} {} {nnz}\n{body}", m.rows(), m.cols())
}

pub fn edges_csv(vd: &VoronoiDiagram) -> String {
    let mut s = String::from("i,j,mx,my,len\n");
    for e in &vd.edges {
        let _ = writeln!(s, "{},{},{},{},{}", e.i, e.j, fmt_f64(e.midpoint[0]), fmt_f64(e.midpoint[1]), fmt_f64(e.length));
    }
    s
}

pub fn energy_csv(trace: &EnergyTrace) -> String {
    let d = trace.decimate(ENERGY_ROWS);
    let mut s = String::from("t,ratio\n");
    for (t, r) in d.times.iter().zip(&d.ratios) {
        let _ = writeln!(s, "{},{}", fmt_f64(*t), fmt_f64(*r));
    }
    s
}

pub fn solution_csv(x: &[Point], u: &[f64]) -> String {
    let mut s = String::from("x,y,u\n");
    for (p, v) in x.iter().zip(u) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v));
    }
    s
}

pub fn spectrum_csv(r: &SpectrumReport) -> String {
    let mut s = String::from("re,im,stable\n");
    for (z, &ok) in r.eigenvalues.iter().zip(&r.stable) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(z.re), fmt_f64(z.im), ok as u8);
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("h,N,e1,e2,einf\n");
    for r in rows {
        let e = &r.errors;
        let _ = writeln!(s, "{},{},{},{},{}", fmt_f64(r.h), r.nodes, fmt_f64(e.e1), fmt_f64(e.e2), fmt_f64(e.einf));
    }
    s
}

pub fn quadrature_csv(series: &[QuadratureSeries]) -> String {
    let mut s = String::from("integrand,kind,hy,M,error\n");
    for q in series {
        for ((hy, m), e) in q.hy.iter().zip(&q.points).zip(&q.errors) {
            let _ = writeln!(s, "{},{},{},{m},{}", q.integrand.name(), q.kind.name(), fmt_f64(*hy), fmt_f64(*e));
        }
    }
    s
}
