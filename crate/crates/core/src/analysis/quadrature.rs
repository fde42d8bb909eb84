use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::geometry::{cartesian_points, halton_points, relaxed_points, Domain, Point};
use crate::math::{norm, PI, TAU};

use super::fit_loglog;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// `e^{−3r}`.
    Gaussian,
    /// `r³`.
    Cubic,
    /// Three pieces split at `r = 0.5` and `r = 0.7`.
    Discontinuous,
    Constant,
}

impl Integrand {
    pub fn eval(self, y: Point) -> f64 {
        let r = norm(y);
        match self {
            Integrand::Gaussian => (-3.0 * r).exp(),
            Integrand::Cubic => r * r * r,
            Integrand::Discontinuous => {
                let s = 4.0 * PI * y[0] * y[1];
                if r <= 0.5 {
                    0.2 + s.sin()
                } else if r <= 0.7 {
                    y[0] * y[0] * y[0] * y[1]
                } else {
                    0.4 + s.cos()
                }
            }
            Integrand::Constant => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Integrand::Gaussian => "gaussian",
            Integrand::Cubic => "cubic",
            Integrand::Discontinuous => "discontinuous",
            Integrand::Constant => "constant",
        }
    }

    /// `∫₀^ρ f(r,θ) r dr` in closed form.
    fn radial(self, rho: f64, theta: f64) -> f64 {
        match self {
            Integrand::Gaussian => (1.0 - (-3.0 * rho).exp() * (1.0 + 3.0 * rho)) / 9.0,
            Integrand::Cubic => rho.powi(5) / 5.0,
            Integrand::Constant => 0.5 * rho * rho,
            Integrand::Discontinuous => {
                let (s, c) = theta.sin_cos();
                // y₁y₂ = r² sin θ cos θ; the trigonometric pieces integrate in s = r².
                let a = 4.0 * PI * s * c;
                let sin_part = |r0: f64, r1: f64| {
                    if a.abs() < 1e-300 {
                        0.0
                    } else {
                        ((a * r0 * r0).cos() - (a * r1 * r1).cos()) / (2.0 * a)
                    }
                };
                let cos_part = |r0: f64, r1: f64| {
                    if a.abs() < 1e-300 {
                        0.5 * (r1 * r1 - r0 * r0)
                    } else {
                        ((a * r1 * r1).sin() - (a * r0 * r0).sin()) / (2.0 * a)
                    }
                };
                let inner = rho.min(0.5);
                let mut v = 0.1 * inner * inner + sin_part(0.0, inner);
                if rho > 0.5 {
                    let r1 = rho.min(0.7);
                    v += c * c * c * s * (r1.powi(6) - 0.5f64.powi(6)) / 6.0;
                }
                if rho > 0.7 {
                    v += 0.2 * (rho * rho - 0.49) + cos_part(0.7, rho);
                }
                v
            }
        }
    }
}

/// `∫_Ω f` for a polar domain: closed-form radial integral, composite
/// Gauss–Legendre in θ with panels split where `r(θ)` crosses 0.5 or 0.7.
pub fn reference_integral(domain: &Domain, f: Integrand) -> f64 {
    let mut breaks: Vec<f64> = (0..=64).map(|k| TAU * k as f64 / 64.0).collect();
    // Crossings of r(θ) through the piece radii, located by bisection on a fine scan.
    let scan = 8192;
    for level in [0.5, 0.7] {
        for k in 0..scan {
            let (mut a, mut b) = (TAU * k as f64 / scan as f64, TAU * (k + 1) as f64 / scan as f64);
            let g = |t: f64| domain.radius(t) - level;
            if g(a) * g(b) < 0.0 {
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if g(a) * g(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                breaks.push(0.5 * (a + b));
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let (x, w) = gauss_legendre(32);
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            let t = c + hw * xi;
            total += hw * wi * f.radial(domain.radius(t), t);
        }
    }
    total
}

/// Nodes and weights on `[−1, 1]` by Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x.push(z);
        w.push(2.0 / ((1.0 - z * z) * dp * dp));
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadKind {
    Cartesian,
    Halton,
    /// Lloyd-relaxed quasi-uniform points.
    Relaxed,
}

impl QuadKind {
    pub fn name(self) -> &'static str {
        match self {
            QuadKind::Cartesian => "cartesian",
            QuadKind::Halton => "halton",
            QuadKind::Relaxed => "relaxed",
        }
    }
}

/// Point set of spacing `hy`, i.e. about `|Ω|/hy²` points.
pub fn quadrature_points(domain: &Domain, kind: QuadKind, hy: f64, seed: u64) -> Result<Vec<Point>> {
    let count = (domain.area() / (hy * hy)).round() as usize;
    Ok(match kind {
        QuadKind::Cartesian => cartesian_points(domain, hy, seed).points,
        QuadKind::Halton => halton_points(domain, hy, count, seed).points,
        QuadKind::Relaxed => relaxed_points(domain, hy, count, seed)?.points,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSeries {
    pub integrand: Integrand,
    pub kind: QuadKind,
    pub hy: Vec<f64>,
    /// Mean point count over the realizations.
    pub points: Vec<usize>,
    /// Root mean square of `|I − I_h|` over the realizations.
    pub errors: Vec<f64>,
    /// Decay order in `h_y` and R² of the log-log fit.
    pub slope: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureReport {
    pub series: Vec<QuadratureSeries>,
}

/// Seed of realization `k`; Halton seeds are far apart so the index windows do not overlap.
fn realization_seed(kind: QuadKind, seed: u64, k: usize) -> u64 {
    match kind {
        QuadKind::Halton => seed.wrapping_add(1_000_003 * k as u64),
        _ => seed.wrapping_add(k as u64),
    }
}

/// `|I − (|Ω|/M) Σ f(y_k)|` over the `hy` sweep for every integrand and kind,
/// as a root mean square over `realizations` seeded point sets.
pub fn quadrature_study(
    domain: &Domain,
    integrands: &[Integrand],
    kinds: &[QuadKind],
    hys: &[f64],
    seed: u64,
    realizations: usize,
) -> Result<QuadratureReport> {
    let area = domain.area();
    let reps = realizations.max(1);
    let exact: Vec<f64> = integrands.iter().map(|&f| reference_integral(domain, f)).collect();
    let mut series = Vec::new();
    for &kind in kinds {
        let mut sq = vec![vec![0.0; hys.len()]; integrands.len()];
        let mut counts = vec![0usize; hys.len()];
        for (j, &hy) in hys.iter().enumerate() {
            for k in 0..reps {
                let ys = quadrature_points(domain, kind, hy, realization_seed(kind, seed, k))?;
                counts[j] += ys.len();
                for (i, &f) in integrands.iter().enumerate() {
                    let ih = area / ys.len() as f64 * ys.iter().map(|&y| f.eval(y)).sum::<f64>();
                    sq[i][j] += (exact[i] - ih) * (exact[i] - ih);
                }
            }
        }
        for (i, &f) in integrands.iter().enumerate() {
            let errors: Vec<f64> = sq[i].iter().map(|s| (s / reps as f64).sqrt()).collect();
            let (slope, r2) = if errors.iter().all(|&e| e > 0.0) {
                let (s, r2) = fit_loglog(hys, &errors);
                (s, r2)
            } else {
                (f64::NAN, f64::NAN)
            };
            series.push(QuadratureSeries {
                integrand: f,
                kind,
                hy: hys.to_vec(),
                points: counts.iter().map(|c| c / reps).collect(),
                errors,
                slope,
                r2,
            });
        }
    }
    Ok(QuadratureReport { series })
}
