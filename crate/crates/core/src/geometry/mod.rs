//! Domains, node and evaluation point sets, inflow/outflow classification.

pub mod domain;

use alloc::format;
use alloc::vec::Vec;
use rand::Rng as _;

pub use domain::{BoundaryPolygon, Domain};

use crate::advection::VelocityField;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::math::{binomial, TAU};
use crate::voronoi::cell::CellBuilder;

pub type Point = [f64; 2];

/// Lloyd iterations used by the relaxed generators.
pub const LLOYD_ITERATIONS: usize = 40;

/// Power-diagram rounds applied after Lloyd to the relaxed evaluation sets.
pub const EQUAL_AREA_ROUNDS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    QuasiUniform,
    Perturbed,
    Cartesian,
    Halton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalKind {
    /// `Y = X`.
    Collocate,
    QuasiUniform,
    Cartesian,
    Halton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    /// `true` for nodes placed on the boundary.
    pub boundary: Vec<bool>,
    /// Target spacing the set was generated for.
    pub h: f64,
    pub kind: PointKind,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.boundary[i]).collect()
    }

    /// Smallest pairwise distance.
    pub fn min_distance(&self) -> f64 {
        if self.len() < 2 {
            return f64::INFINITY;
        }
        let tree = KdTree::new(&self.points);
        self.points.iter().map(|&p| tree.k_nearest(p, 2)[1].1).fold(f64::INFINITY, f64::min)
    }

    /// Mean distance to the nearest other point.
    pub fn mean_nearest_distance(&self) -> f64 {
        let tree = KdTree::new(&self.points);
        self.points.iter().map(|&p| tree.k_nearest(p, 2)[1].1).sum::<f64>() / self.len() as f64
    }

    /// Containment and distinctness.
    pub fn check(&self, domain: &Domain) -> Result<()> {
        if let Some(i) = self.points.iter().position(|&p| !domain.contains_closed(p)) {
            return Err(Error::Geometry(format!("point {i} lies outside the domain")));
        }
        if self.min_distance() <= 1e-12 {
            return Err(Error::Geometry(format!("duplicate points in set of size {}", self.len())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryClassification {
    pub inflow: Vec<usize>,
    pub outflow: Vec<usize>,
    /// Boundary node index and its outward normal.
    pub normals: Vec<(usize, Point)>,
}

impl BoundaryClassification {
    pub fn inflow_mask(&self, n: usize) -> Vec<bool> {
        let mut m = alloc::vec![false; n];
        for &i in &self.inflow {
            m[i] = true;
        }
        m
    }
}

/// Node count a hexagonal packing of pitch `h` puts into the domain.
pub fn hex_count(domain: &Domain, h: f64) -> usize {
    (domain.area() / (0.5 * 3.0f64.sqrt() * h * h)).round() as usize
}

/// Quasi-uniform nodes with a boundary layer of `⌈perimeter/h⌉` points.
pub fn generate_nodes(domain: &Domain, h: f64, seed: u64) -> Result<PointSet> {
    if !(h > 0.0) || h >= domain.diameter() {
        return Err(Error::config(format!("spacing h={h} must be positive and below the domain diameter")));
    }
    let target = hex_count(domain, h);
    // Three times the monomial count of the lowest supported degree (p = 2).
    let min_nodes = 3 * binomial(4, 2);
    let boundary = domain.boundary_polygon(h).points;
    if target < min_nodes || target <= boundary.len() {
        return Err(Error::config(format!("spacing h={h} leaves only {target} nodes")));
    }
    let mut rng = crate::rng(seed);
    let interior = lattice_fill(domain, h, target - boundary.len(), &mut rng);
    let mut points = boundary.clone();
    points.extend(interior);
    let mut flags = alloc::vec![false; points.len()];
    flags[..boundary.len()].iter_mut().for_each(|f| *f = true);
    relax(domain, &mut points, &flags, h, LLOYD_ITERATIONS)?;
    Ok(PointSet { points, boundary: flags, h, kind: PointKind::QuasiUniform })
}

/// Hex lattice of pitch `h` with a seeded offset and rotation; keeps the `count`
/// points farthest from the boundary. Pitch shrinks until enough points fit.
fn lattice_fill(domain: &Domain, h: f64, count: usize, rng: &mut crate::Rng) -> Vec<Point> {
    let lat = Lattice::new(domain, h, rng);
    let mut pitch = h;
    loop {
        let mut cand = lat.candidates(pitch, 0.3);
        if cand.len() >= count {
            return deepest(&mut cand, count);
        }
        pitch *= 0.98;
    }
}

/// As [`lattice_fill`] but with the pitch tuned so that the lattice points
/// inside the domain number about `count`. Keeping points right up to the
/// boundary leaves no excess area in the outer row for Lloyd to redistribute.
fn lattice_fill_uniform(domain: &Domain, count: usize, rng: &mut crate::Rng) -> Vec<Point> {
    let mut pitch = (domain.area() / (0.5 * 3.0f64.sqrt() * count as f64)).sqrt();
    let lat = Lattice::new(domain, pitch, rng);
    for _ in 0..50 {
        let mut cand = lat.candidates(pitch, 0.05);
        let ratio = cand.len() as f64 / count as f64;
        if cand.len() >= count && ratio < 1.002 {
            return deepest(&mut cand, count);
        }
        pitch *= if cand.len() >= count { ratio.sqrt().min(1.0 + 1e-3) } else { ratio.sqrt().max(0.999) };
    }
    lattice_fill(domain, pitch, count, rng)
}

fn deepest(cand: &mut Vec<(f64, Point)>, count: usize) -> Vec<Point> {
    // Deepest first; ties by position for determinism.
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1[0].total_cmp(&b.1[0])).then(a.1[1].total_cmp(&b.1[1])));
    cand.truncate(count);
    cand.iter().map(|e| e.1).collect()
}

struct Lattice {
    samples: KdTree,
    domain: Domain,
    center: Point,
    reach: f64,
    offset: [f64; 2],
    rot: (f64, f64),
}

impl Lattice {
    fn new(domain: &Domain, h: f64, rng: &mut crate::Rng) -> Self {
        let (lo, hi) = domain.bounding_box();
        let offset = [rng.gen::<f64>(), rng.gen::<f64>()];
        let angle = rng.gen::<f64>() * TAU / 6.0;
        Lattice {
            samples: KdTree::new(&domain.boundary_polygon(h / 8.0).points),
            domain: *domain,
            center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            reach: 0.5 * crate::math::dist(lo, hi) + 2.0 * h,
            offset,
            rot: angle.sin_cos(),
        }
    }

    /// Lattice points deeper than `depth·pitch`, with their depth.
    fn candidates(&self, pitch: f64, depth: f64) -> Vec<(f64, Point)> {
        let (sa, ca) = self.rot;
        let nrow = (self.reach / (pitch * 0.5 * 3.0f64.sqrt())).ceil() as i64 + 1;
        let ncol = (self.reach / pitch).ceil() as i64 + 1;
        let mut cand = Vec::new();
        for r in -nrow..=nrow {
            for c in -ncol..=ncol {
                let u = (c as f64 + self.offset[0] + if r % 2 != 0 { 0.5 } else { 0.0 }) * pitch;
                let v = (r as f64 + self.offset[1]) * pitch * 0.5 * 3.0f64.sqrt();
                let p = [self.center[0] + ca * u - sa * v, self.center[1] + sa * u + ca * v];
                if self.domain.contains(p) {
                    let d = self.samples.nearest(p).unwrap().1;
                    if d > depth * pitch {
                        cand.push((d, p));
                    }
                }
            }
        }
        cand
    }
}

/// Lloyd relaxation towards the centroids of the domain-clipped Voronoi cells.
/// Points flagged `pinned` are moved along the boundary only.
fn relax(domain: &Domain, points: &mut [Point], on_boundary: &[bool], h: f64, iterations: usize) -> Result<()> {
    for _ in 0..iterations {
        let next: Vec<Point> = {
            let builder = CellBuilder::new(points, domain, h / 4.0);
            let mut next = Vec::with_capacity(points.len());
            for i in 0..points.len() {
                let c = match builder.cell(i)? {
                    Some(cell) => cell.centroid(),
                    None => points[i],
                };
                next.push(if on_boundary[i] { domain.project_to_boundary(c) } else { c });
            }
            next
        };
        points.copy_from_slice(&next);
    }
    Ok(())
}

/// Capacity-constrained relaxation: each round solves for power weights giving
/// all cells the area `|Ω|/M` (Newton, the Jacobian is a weighted graph
/// Laplacian) and then moves every point to the centroid of its power cell.
/// Plain Lloyd converges to cells that are about 1% too small along the
/// boundary, which caps equal-weight quadrature at first order.
fn equalize_areas(domain: &Domain, points: &mut [Point], h: f64, rounds: usize) -> Result<()> {
    use crate::linalg::{cg, CgOptions, CsrBuilder};
    use crate::voronoi::EdgeLabel;
    let m = points.len();
    let mut w = alloc::vec![0.0; m];
    let power_cells = |pts: &[Point], w: &[f64]| -> Result<Option<Vec<crate::voronoi::Cell>>> {
        let b = CellBuilder::new(pts, domain, h / 4.0).with_weights(w);
        let mut out = Vec::with_capacity(pts.len());
        for i in 0..pts.len() {
            match b.cell(i)? {
                Some(c) => out.push(c),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    };
    for _ in 0..rounds {
        let mut cells = power_cells(points, &w)?
            .ok_or_else(|| Error::Geometry(format!("empty power cell before equalization")))?;
        for _ in 0..8 {
            let areas: Vec<f64> = cells.iter().map(|c| c.area()).collect();
            let target = areas.iter().sum::<f64>() / m as f64;
            let r: Vec<f64> = areas.iter().map(|a| target - a).collect();
            if r.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-8 * target {
                break;
            }
            let mut lap = CsrBuilder::with_capacity(m, m, 7 * m);
            let mut diag = alloc::vec![0.0; m];
            for (i, c) in cells.iter().enumerate() {
                let mut row = Vec::with_capacity(c.vertices.len() + 1);
                for k in 0..c.vertices.len() {
                    if let EdgeLabel::Neighbor(j) = c.labels[k] {
                        let (a, b) = c.edge(k);
                        let coef = crate::math::dist(a, b) / (2.0 * crate::math::dist(points[i], points[j]));
                        row.push((j, -coef));
                        diag[i] += coef;
                    }
                }
                row.push((i, diag[i] * (1.0 + 1e-10)));
                row.sort_by_key(|e| e.0);
                lap.push_row(row);
            }
            let lap = lap.finish();
            let lap = lap.add(0.5, &lap.transpose(), 0.5);
            let mut dw = alloc::vec![0.0; m];
            let opts = CgOptions { tol: 1e-8, max_iter: 20 * m };
            match cg(|x, y| lap.matvec(x, y), &diag, &r, &mut dw, opts) {
                Ok(_) | Err(Error::Solver { .. }) => {}
                Err(e) => return Err(e),
            }
            // Damped until no cell empties.
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = w.iter().zip(&dw).map(|(a, d)| a + step * d).collect();
                if let Some(next) = power_cells(points, &trial)? {
                    w = trial;
                    cells = next;
                    break;
                }
                step *= 0.5;
                if step < 1e-3 {
                    return Err(Error::Geometry(format!("area equalization stalled")));
                }
            }
        }
        for (p, c) in points.iter_mut().zip(&cells) {
            let q = c.centroid();
            if domain.contains(q) {
                *p = q;
            }
        }
    }
    Ok(())
}

/// Displaces interior points by uniform vectors in a disk of radius `fraction·h`.
pub fn perturb_nodes(domain: &Domain, ps: &PointSet, fraction: f64, seed: u64) -> Result<PointSet> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::config(format!("perturbation fraction {fraction} must lie in [0, 1)")));
    }
    let mut out = ps.clone();
    if fraction == 0.0 {
        return Ok(out);
    }
    let mut rng = crate::rng(seed);
    let radius = fraction * ps.h;
    for i in 0..out.len() {
        if out.boundary[i] {
            continue;
        }
        let p = ps.points[i];
        loop {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = TAU * rng.gen::<f64>();
            let q = [p[0] + r * t.cos(), p[1] + r * t.sin()];
            if domain.contains(q) {
                out.points[i] = q;
                break;
            }
        }
    }
    out.kind = PointKind::Perturbed;
    Ok(out)
}

/// Evaluation set with spacing `h/√q` (or `Y = X` for [`EvalKind::Collocate`]).
pub fn generate_evaluation_set(
    domain: &Domain,
    nodes: &PointSet,
    q: usize,
    kind: EvalKind,
    seed: u64,
) -> Result<PointSet> {
    if q == 0 {
        return Err(Error::config("oversampling q must be at least 1"));
    }
    let hy = nodes.h / (q as f64).sqrt();
    match kind {
        EvalKind::Collocate => {
            if q != 1 {
                return Err(Error::config("collocation requires q = 1"));
            }
            Ok(nodes.clone())
        }
        EvalKind::QuasiUniform => relaxed_points(domain, hy, q * nodes.len(), seed),
        EvalKind::Cartesian => Ok(cartesian_points(domain, hy, seed)),
        EvalKind::Halton => Ok(halton_points(domain, hy, q * nodes.len(), seed)),
    }
}

/// `count` relaxed points without a boundary layer.
pub fn relaxed_points(domain: &Domain, hy: f64, count: usize, seed: u64) -> Result<PointSet> {
    let mut rng = crate::rng(seed);
    let mut points = lattice_fill_uniform(domain, count, &mut rng);
    let flags = alloc::vec![false; points.len()];
    relax(domain, &mut points, &flags, hy, LLOYD_ITERATIONS)?;
    equalize_areas(domain, &mut points, hy, EQUAL_AREA_ROUNDS)?;
    Ok(PointSet { points, boundary: flags, h: hy, kind: PointKind::QuasiUniform })
}

/// Cartesian grid of spacing `hy` (seeded sub-cell offset), restricted to the open domain.
pub fn cartesian_points(domain: &Domain, hy: f64, seed: u64) -> PointSet {
    let mut rng = crate::rng(seed);
    let off = [rng.gen::<f64>(), rng.gen::<f64>()];
    let (lo, hi) = domain.bounding_box();
    let nx = ((hi[0] - lo[0]) / hy).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1]) / hy).ceil() as usize + 1;
    let mut points = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = [lo[0] + (i as f64 + off[0]) * hy, lo[1] + (j as f64 + off[1]) * hy];
            if domain.contains(p) {
                points.push(p);
            }
        }
    }
    let n = points.len();
    PointSet { points, boundary: alloc::vec![false; n], h: hy, kind: PointKind::Cartesian }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// First `count` points of the (2,3) Halton sequence over the bounding box that
/// fall inside the domain. The sequence starts at index `seed + 1`.
pub fn halton_points(domain: &Domain, hy: f64, count: usize, seed: u64) -> PointSet {
    let (lo, hi) = domain.bounding_box();
    let mut points = Vec::with_capacity(count);
    let mut i = seed + 1;
    while points.len() < count {
        let p = [
            lo[0] + (hi[0] - lo[0]) * radical_inverse(i, 2),
            lo[1] + (hi[1] - lo[1]) * radical_inverse(i, 3),
        ];
        if domain.contains(p) {
            points.push(p);
        }
        i += 1;
    }
    PointSet { points, boundary: alloc::vec![false; count], h: hy, kind: PointKind::Halton }
}

/// `(|Ω|/M)^{1/2}` with `|Ω|` estimated on a 1000×1000 grid over the bounding box.
pub fn estimate_spacing(ps: &PointSet, domain: &Domain) -> f64 {
    const G: usize = 1000;
    let (lo, hi) = domain.bounding_box();
    let (dx, dy) = ((hi[0] - lo[0]) / G as f64, (hi[1] - lo[1]) / G as f64);
    let mut inside = 0usize;
    for j in 0..G {
        for i in 0..G {
            if domain.contains([lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy]) {
                inside += 1;
            }
        }
    }
    let area = inside as f64 * dx * dy;
    (area / ps.len() as f64).sqrt()
}

/// Splits boundary nodes by the sign of `F′(t)·n`; zero goes to outflow.
pub fn classify_boundary(ps: &PointSet, domain: &Domain, velocity: &VelocityField, t: f64) -> BoundaryClassification {
    let f = velocity.eval(t);
    let mut c = BoundaryClassification { inflow: Vec::new(), outflow: Vec::new(), normals: Vec::new() };
    for i in ps.boundary_indices() {
        let n = domain.outward_normal(ps.points[i]);
        if f[0] * n[0] + f[1] * n[1] < 0.0 {
            c.inflow.push(i);
        } else {
            c.outflow.push(i);
        }
        c.normals.push((i, n));
    }
    c
}
