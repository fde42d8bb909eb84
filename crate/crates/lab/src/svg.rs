//! Eigenvalue scatter in the `λΔt` plane against the RK4 stability boundary.

use std::fmt::Write as _;

use num_complex::Complex64;

use rbf_advect::analysis::SpectrumReport;

/// Monic coefficients (low to high, leading 1 implied) of `24(R(z) − w)`.
fn quartic(w: Complex64) -> [Complex64; 4] {
    let c = |v: f64| Complex64::new(v, 0.0);
    [c(24.0) * (c(1.0) - w), c(24.0), c(12.0), c(4.0)]
}

fn eval(a: &[Complex64; 4], z: Complex64) -> Complex64 {
    (((z + a[3]) * z + a[2]) * z + a[1]) * z + a[0]
}

/// Durand–Kerner (Weierstrass) iteration started from `roots`.
fn refine(a: &[Complex64; 4], roots: &mut [Complex64; 4], iterations: usize) {
    for _ in 0..iterations {
        let mut moved = 0.0f64;
        for i in 0..4 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval(a, roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
}

/// The curve `|R(z)| = 1` as four branches `R(z) = e^{iθ}`, `θ ∈ [0, 2π]`,
/// each continued from the previous angle.
pub fn rk4_boundary(samples: usize) -> [Vec<Complex64>; 4] {
    let seed = Complex64::new(0.4, 0.9);
    let mut roots = [seed, seed * seed, seed * seed * seed, seed * seed * seed * seed];
    refine(&quartic(Complex64::new(1.0, 0.0)), &mut roots, 500);
    let mut branches: [Vec<Complex64>; 4] = Default::default();
    for k in 0..=samples {
        let theta = std::f64::consts::TAU * k as f64 / samples as f64;
        refine(&quartic(Complex64::from_polar(1.0, theta)), &mut roots, 100);
        for (b, &z) in branches.iter_mut().zip(&roots) {
            b.push(z);
        }
    }
    branches
}

pub fn spectrum_svg(report: &SpectrumReport, title: &str) -> String {
    let boundary = rk4_boundary(720);
    let scaled: Vec<Complex64> = report.eigenvalues.iter().map(|z| z * report.dt).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (-3.0f64, 0.5f64, -3.0f64, 3.0f64);
    for z in &scaled {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0);
    let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
    let size = 600.0;
    let scale = size / (x1 - x0).max(y1 - y0);
    let (w, h) = ((x1 - x0) * scale, (y1 - y0) * scale);
    let px = |z: Complex64| ((z.re - x0) * scale, (y1 - z.im) * scale);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{:.1}" viewBox="0 0 {w:.1} {:.1}">"#, h + 24.0, h + 24.0);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (ax, ay) = px(Complex64::new(0.0, 0.0));
    let _ = writeln!(s, r##"<line x1="0" y1="{ay:.2}" x2="{w:.2}" y2="{ay:.2}" stroke="#999" stroke-width="0.5"/>"##);
    let _ = writeln!(s, r##"<line x1="{ax:.2}" y1="0" x2="{ax:.2}" y2="{h:.2}" stroke="#999" stroke-width="0.5"/>"##);
    for b in &boundary {
        let pts: Vec<String> = b.iter().map(|&z| {
            let (x, y) = px(z);
            format!("{x:.2},{y:.2}")
        }).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#, pts.join(" "));
    }
    for (z, &ok) in scaled.iter().zip(&report.stable) {
        let (x, y) = px(*z);
        let color = if ok { "#1f5fbf" } else { "#d62728" };
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="6" y="{:.1}" font-family="sans-serif" font-size="12">{} (λΔt, {} of {} outside)</text>"#,
        h + 17.0,
        title,
        report.unstable,
        report.len()
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbf_advect::analysis::{rk4_amplification, rk4_real_boundary};

    #[test]
    fn boundary_lies_on_the_unit_level_set() {
        let branches = rk4_boundary(180);
        let mut leftmost = 0.0f64;
        for b in &branches {
            for &z in b {
                assert!((rk4_amplification(z) - 1.0).abs() < 1e-10, "{z}");
                leftmost = leftmost.min(z.re);
            }
        }
        assert!((leftmost + rk4_real_boundary()).abs() < 1e-3);
    }
}
