use alloc::vec::Vec;

use super::Point;
use crate::math::{PI, TAU};

/// Computational domain. Polar domains are star-shaped about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// `r(θ) = 1 − sin²(2θ)/3`.
    Star,
    Disk { radius: f64 },
    Rectangle { min: Point, max: Point },
}

/// Boundary polygon sampled at (approximately) uniform arclength.
#[derive(Clone, Debug)]
pub struct BoundaryPolygon {
    pub points: Vec<Point>,
    /// Polar angle of each vertex in `[0, 2π)`, ascending; empty for non-polar domains.
    pub angles: Vec<f64>,
}

const TABLE: usize = 8192;

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Rectangle { min: [0.0, 0.0], max: [1.0, 1.0] }
    }

    pub fn is_polar(&self) -> bool {
        !matches!(self, Domain::Rectangle { .. })
    }

    /// Polar radius and its first two derivatives.
    fn polar(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            Domain::Star => {
                let s = (2.0 * theta).sin();
                (1.0 - s * s / 3.0, -(2.0 / 3.0) * (4.0 * theta).sin(), -(8.0 / 3.0) * (4.0 * theta).cos())
            }
            Domain::Disk { radius } => (*radius, 0.0, 0.0),
            Domain::Rectangle { .. } => unreachable!("rectangle has no polar form"),
        }
    }

    /// Boundary radius `r(θ)` of a polar domain.
    pub fn radius(&self, theta: f64) -> f64 {
        self.polar(theta).0
    }

    /// Open membership test.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Domain::Rectangle { min, max } => p[0] > min[0] && p[0] < max[0] && p[1] > min[1] && p[1] < max[1],
            _ => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                rho < self.radius(p[1].atan2(p[0]))
            }
        }
    }

    /// Closed membership with a relative tolerance for points placed on the boundary.
    pub fn contains_closed(&self, p: Point) -> bool {
        const TOL: f64 = 1e-12;
        match self {
            Domain::Rectangle { min, max } => {
                let t = TOL * (max[0] - min[0]).max(max[1] - min[1]);
                p[0] >= min[0] - t && p[0] <= max[0] + t && p[1] >= min[1] - t && p[1] <= max[1] + t
            }
            _ => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                rho <= self.radius(p[1].atan2(p[0])) * (1.0 + TOL)
            }
        }
    }

    /// Exact area.
    pub fn area(&self) -> f64 {
        match self {
            // ½∫(1 − sin²2θ/3)² dθ = ½·2π·(1 − 1/3 + 1/24)
            Domain::Star => 17.0 * PI / 24.0,
            Domain::Disk { radius } => PI * radius * radius,
            Domain::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Domain::Star => ([-1.0, -1.0], [1.0, 1.0]),
            Domain::Disk { radius } => ([-radius, -radius], [*radius, *radius]),
            Domain::Rectangle { min, max } => (*min, *max),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        crate::math::dist(lo, hi)
    }

    fn curve(&self, theta: f64) -> (Point, Point, Point) {
        let (r, dr, ddr) = self.polar(theta);
        let (s, c) = theta.sin_cos();
        let p = [r * c, r * s];
        let d1 = [dr * c - r * s, dr * s + r * c];
        let d2 = [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s];
        (p, d1, d2)
    }

    /// Cumulative arclength table over `θ ∈ [0, 2π]` (trapezoidal).
    fn arclength_table(&self) -> Vec<f64> {
        let dt = TAU / TABLE as f64;
        let speed = |t: f64| {
            let (_, d, _) = self.curve(t);
            crate::math::norm(d)
        };
        let mut s = Vec::with_capacity(TABLE + 1);
        s.push(0.0);
        let mut prev = speed(0.0);
        for k in 1..=TABLE {
            let cur = speed(k as f64 * dt);
            let last = *s.last().unwrap();
            s.push(last + 0.5 * dt * (prev + cur));
            prev = cur;
        }
        s
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Rectangle { min, max } => 2.0 * ((max[0] - min[0]) + (max[1] - min[1])),
            Domain::Disk { radius } => TAU * radius,
            _ => self.arclength_table()[TABLE],
        }
    }

    /// `⌈perimeter/spacing⌉` boundary points equispaced in arclength, starting at
    /// `θ = 0` (polar) or at `min` (rectangle), counter-clockwise.
    pub fn boundary_polygon(&self, spacing: f64) -> BoundaryPolygon {
        let perim = self.perimeter();
        let k = ((perim / spacing).ceil() as usize).max(3);
        match self {
            Domain::Rectangle { min, max } => {
                let w = max[0] - min[0];
                let h = max[1] - min[1];
                let points = (0..k)
                    .map(|i| {
                        let s = i as f64 * perim / k as f64;
                        if s < w {
                            [min[0] + s, min[1]]
                        } else if s < w + h {
                            [max[0], min[1] + (s - w)]
                        } else if s < 2.0 * w + h {
                            [max[0] - (s - w - h), max[1]]
                        } else {
                            [min[0], max[1] - (s - 2.0 * w - h)]
                        }
                    })
                    .collect();
                BoundaryPolygon { points, angles: Vec::new() }
            }
            _ => {
                let table = self.arclength_table();
                let total = table[TABLE];
                let dt = TAU / TABLE as f64;
                let mut points = Vec::with_capacity(k);
                let mut angles = Vec::with_capacity(k);
                let mut seg = 0usize;
                for i in 0..k {
                    let target = i as f64 * total / k as f64;
                    while seg + 1 < TABLE && table[seg + 1] < target {
                        seg += 1;
                    }
                    let frac = (target - table[seg]) / (table[seg + 1] - table[seg]);
                    let theta = (seg as f64 + frac) * dt;
                    let (p, _, _) = self.curve(theta);
                    points.push(p);
                    angles.push(theta);
                }
                BoundaryPolygon { points, angles }
            }
        }
    }

    /// Unit outward normal at (or near) a boundary point.
    pub fn outward_normal(&self, p: Point) -> Point {
        match self {
            Domain::Rectangle { min, max } => {
                let d = [p[0] - min[0], max[0] - p[0], p[1] - min[1], max[1] - p[1]];
                let normals = [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
                let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let tol = 1e-12 * (max[0] - min[0]).max(max[1] - min[1]);
                let mut n = [0.0, 0.0];
                for k in 0..4 {
                    if d[k] <= dmin + tol {
                        n[0] += normals[k][0];
                        n[1] += normals[k][1];
                    }
                }
                let l = crate::math::norm(n);
                [n[0] / l, n[1] / l]
            }
            _ => {
                let theta = p[1].atan2(p[0]);
                let (_, d, _) = self.curve(theta);
                let l = crate::math::norm(d);
                [d[1] / l, -d[0] / l]
            }
        }
    }

    /// Closest boundary point, by Newton iteration on the polar parameter.
    pub fn project_to_boundary(&self, p: Point) -> Point {
        match self {
            Domain::Rectangle { min, max } => {
                let q = [p[0].clamp(min[0], max[0]), p[1].clamp(min[1], max[1])];
                let d = [q[0] - min[0], max[0] - q[0], q[1] - min[1], max[1] - q[1]];
                let mut k = 0;
                for j in 1..4 {
                    if d[j] < d[k] {
                        k = j;
                    }
                }
                match k {
                    0 => [min[0], q[1]],
                    1 => [max[0], q[1]],
                    2 => [q[0], min[1]],
                    _ => [q[0], max[1]],
                }
            }
            _ => {
                let mut theta = p[1].atan2(p[0]);
                for _ in 0..30 {
                    let (c, d1, d2) = self.curve(theta);
                    let e = [c[0] - p[0], c[1] - p[1]];
                    let g = e[0] * d1[0] + e[1] * d1[1];
                    let dg = d1[0] * d1[0] + d1[1] * d1[1] + e[0] * d2[0] + e[1] * d2[1];
                    if dg <= 0.0 {
                        theta = p[1].atan2(p[0]);
                        break;
                    }
                    let step = g / dg;
                    theta -= step;
                    if step.abs() < 1e-15 {
                        break;
                    }
                }
                self.curve(theta).0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_area_matches_polar_quadrature() {
        // Oracle: periodic trapezoid rule on ½∫r(θ)²dθ (spectrally accurate).
        let n = 2000;
        let d = Domain::Star;
        let q: f64 = (0..n).map(|k| 0.5 * d.radius(TAU * k as f64 / n as f64).powi(2)).sum::<f64>() * TAU / n as f64;
        assert!((q - d.area()).abs() < 1e-12);
        assert!((d.area() - 2.2253).abs() < 1e-4);
    }

    #[test]
    fn star_boundary_is_star_shaped_and_periodic() {
        let d = Domain::Star;
        for k in 0..360 {
            let t = k as f64 * TAU / 360.0;
            assert!(d.radius(t) > 0.0);
            assert!((d.radius(t) - d.radius(t + TAU)).abs() < 1e-14);
        }
        assert!(d.contains([0.9, 0.0]));
        assert!(!d.contains([0.7, 0.7]));
    }

    #[test]
    fn normals_point_outward() {
        let d = Domain::Star;
        let n0 = d.outward_normal([1.0, 0.0]);
        assert!((n0[0] - 1.0).abs() < 1e-14 && n0[1].abs() < 1e-14);
        let npi = d.outward_normal([-1.0, 0.0]);
        assert!((npi[0] + 1.0).abs() < 1e-14);
        let sq = Domain::unit_square();
        assert_eq!(sq.outward_normal([0.5, 0.0]), [0.0, -1.0]);
    }

    #[test]
    fn projection_lands_on_the_curve_orthogonally() {
        let d = Domain::Star;
        for &p in &[[0.9, 0.3], [0.5, 0.6], [-0.2, 1.1], [0.0, -0.5]] {
            let q = d.project_to_boundary(p);
            let theta = q[1].atan2(q[0]);
            assert!((crate::math::norm(q) - d.radius(theta)).abs() < 1e-12);
            let (_, t, _) = d.curve(theta);
            let e = [p[0] - q[0], p[1] - q[1]];
            assert!((e[0] * t[0] + e[1] * t[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_polygon_is_equispaced() {
        let d = Domain::Star;
        let poly = d.boundary_polygon(0.05);
        let k = poly.points.len();
        assert_eq!(k, (d.perimeter() / 0.05).ceil() as usize);
        for i in 0..k {
            let a = poly.points[i];
            let b = poly.points[(i + 1) % k];
            let l = crate::math::dist(a, b);
            assert!(l > 0.9 * d.perimeter() / k as f64 && l < 1.0001 * d.perimeter() / k as f64);
        }
    }
}
