//! Voronoi cells by successive half-plane clipping, clipped to the domain.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::domain::BoundaryPolygon;
use crate::geometry::{Domain, Point};
use crate::kdtree::KdTree;
use crate::math::{PI, TAU};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeLabel {
    /// Bisector with node `j`.
    Neighbor(usize),
    /// Part of the (polygonized) domain boundary.
    Boundary,
    /// Artificial frame edge; never present in a finished cell.
    Frame,
}

/// Counter-clockwise polygon; `labels[k]` belongs to the edge `vertices[k] → vertices[k+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub vertices: Vec<Point>,
    pub labels: Vec<EdgeLabel>,
}

impl Cell {
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut a = 0.0;
        for k in 0..n {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let o = self.vertices[0];
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let p = [self.vertices[k][0] - o[0], self.vertices[k][1] - o[1]];
            let q = [self.vertices[(k + 1) % n][0] - o[0], self.vertices[(k + 1) % n][1] - o[1]];
            let c = p[0] * q[1] - q[0] * p[1];
            a += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        if a.abs() < 1e-300 {
            return o;
        }
        [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
    }

    pub fn edge(&self, k: usize) -> (Point, Point) {
        (self.vertices[k], self.vertices[(k + 1) % self.vertices.len()])
    }

    /// Keeps `{x : a·x ≤ b}`; new edges along the line get `label`.
    fn clip(&mut self, a: Point, b: f64, label: EdgeLabel) {
        let n = self.vertices.len();
        if n == 0 {
            return;
        }
        let side: Vec<f64> = self.vertices.iter().map(|v| a[0] * v[0] + a[1] * v[1] - b).collect();
        if side.iter().all(|&s| s <= 0.0) {
            return;
        }
        let mut verts = Vec::with_capacity(n + 2);
        let mut labels = Vec::with_capacity(n + 2);
        for k in 0..n {
            let kn = (k + 1) % n;
            let (sc, sn) = (side[k], side[kn]);
            let (pc, pn) = (self.vertices[k], self.vertices[kn]);
            let cut = || {
                let t = sc / (sc - sn);
                [pc[0] + t * (pn[0] - pc[0]), pc[1] + t * (pn[1] - pc[1])]
            };
            if sc <= 0.0 {
                verts.push(pc);
                if sn <= 0.0 {
                    labels.push(self.labels[k]);
                } else {
                    labels.push(self.labels[k]);
                    verts.push(cut());
                    labels.push(label);
                }
            } else if sn <= 0.0 {
                verts.push(cut());
                labels.push(self.labels[k]);
            }
        }
        // Drop consecutive duplicates produced by vertices exactly on the line.
        let mut out_v: Vec<Point> = Vec::with_capacity(verts.len());
        let mut out_l: Vec<EdgeLabel> = Vec::with_capacity(verts.len());
        for (v, l) in verts.into_iter().zip(labels) {
            if let Some(last) = out_v.last() {
                if *last == v {
                    *out_l.last_mut().unwrap() = l;
                    continue;
                }
            }
            out_v.push(v);
            out_l.push(l);
        }
        while out_v.len() > 1 && out_v[0] == *out_v.last().unwrap() {
            out_v.pop();
            out_l.pop();
        }
        if out_v.len() < 3 {
            out_v.clear();
            out_l.clear();
        }
        self.vertices = out_v;
        self.labels = out_l;
    }
}

/// Precomputed clipping data for one point set.
pub(crate) struct CellBuilder<'a> {
    points: &'a [Point],
    tree: KdTree,
    domain: &'a Domain,
    frame: (Point, Point),
    poly: BoundaryPolygon,
    weights: Option<&'a [f64]>,
    spread: f64,
}

impl<'a> CellBuilder<'a> {
    pub(crate) fn new(points: &'a [Point], domain: &'a Domain, boundary_spacing: f64) -> Self {
        let (lo, hi) = domain.bounding_box();
        let margin = 0.1 * domain.diameter();
        let frame = ([lo[0] - margin, lo[1] - margin], [hi[0] + margin, hi[1] + margin]);
        CellBuilder {
            points,
            tree: KdTree::new(points),
            domain,
            frame,
            poly: domain.boundary_polygon(boundary_spacing),
            weights: None,
            spread: 0.0,
        }
    }

    /// Power cells: node `i` owns `{x : |x - p_i|² - w_i ≤ |x - p_j|² - w_j}`.
    pub(crate) fn with_weights(mut self, weights: &'a [f64]) -> Self {
        let (lo, hi) = weights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &w| (l.min(w), h.max(w)));
        self.spread = if weights.is_empty() { 0.0 } else { hi - lo };
        self.weights = Some(weights);
        self
    }

    fn inside(&self, q: Point) -> bool {
        self.domain.contains(q)
    }

    fn fully_inside(&self, c: &Cell) -> bool {
        c.labels.iter().all(|l| *l != EdgeLabel::Frame)
            && (0..c.vertices.len()).all(|k| {
                let (a, b) = c.edge(k);
                self.inside(a) && self.inside([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
            })
    }

    /// Intersects `c` (absolute coordinates) with the polygonized domain.
    fn clip_to_domain(&self, c: &Cell) -> Cell {
        match self.domain {
            Domain::Rectangle { min, max } => {
                let mut c = c.clone();
                c.clip([-1.0, 0.0], -min[0], EdgeLabel::Boundary);
                c.clip([1.0, 0.0], max[0], EdgeLabel::Boundary);
                c.clip([0.0, -1.0], -min[1], EdgeLabel::Boundary);
                c.clip([0.0, 1.0], max[1], EdgeLabel::Boundary);
                c
            }
            _ => {
                let mut subject = self.wedge(c).unwrap_or_else(|| Cell {
                    vertices: self.poly.points.clone(),
                    labels: vec![EdgeLabel::Boundary; self.poly.points.len()],
                });
                for k in 0..c.vertices.len() {
                    let (a, b) = c.edge(k);
                    // Outward normal of a CCW edge.
                    let nrm = [b[1] - a[1], a[0] - b[0]];
                    subject.clip(nrm, nrm[0] * a[0] + nrm[1] * a[1], c.labels[k]);
                }
                subject
            }
        }
    }

    /// Cell of node `i` intersected with the polygonized domain; `None` if empty.
    ///
    /// Neighbours are added in order of distance until the next one is farther
    /// than twice the current cell radius. Cells that reach the boundary are
    /// clipped to the domain first so the radius test only sees the part inside.
    pub(crate) fn cell(&self, i: usize) -> Result<Option<Cell>> {
        let p = self.points[i];
        let (lo, hi) = self.frame;
        let mut cell = Cell {
            vertices: vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]],
            labels: vec![EdgeLabel::Frame; 4],
        };
        let n = self.points.len();
        let mut k = 16usize.min(n);
        let mut done = 0usize;
        let mut clipped = false;
        loop {
            let nbrs = self.tree.k_nearest(p, k);
            for &(j, d) in &nbrs[done..] {
                if j == i {
                    continue;
                }
                if d <= 0.0 {
                    return Err(Error::Geometry(alloc::format!("nodes {i} and {j} coincide")));
                }
                let a = [self.points[j][0] - p[0], self.points[j][1] - p[1]];
                let mut b = 0.5 * (a[0] * a[0] + a[1] * a[1]) + a[0] * p[0] + a[1] * p[1];
                if let Some(w) = self.weights {
                    b += 0.5 * (w[i] - w[j]);
                }
                cell.clip(a, b, EdgeLabel::Neighbor(j));
            }
            done = nbrs.len();
            if cell.vertices.is_empty() {
                return Ok(None);
            }
            if !clipped && !self.fully_inside(&cell) {
                cell = self.clip_to_domain(&cell);
                clipped = true;
                if cell.vertices.is_empty() {
                    return Ok(None);
                }
            }
            let far = nbrs.last().map(|e| e.1).unwrap_or(0.0);
            let reach = cell.vertices.iter().fold(0.0f64, |m, v| m.max(crate::math::dist(*v, p)));
            // A farther node can only cut the cell if (far - reach)² < reach² + spread.
            if k >= n || (far >= 2.0 * reach && (far - reach).powi(2) >= reach * reach + self.spread) {
                break;
            }
            k = (2 * k).min(n);
        }
        if cell.labels.contains(&EdgeLabel::Frame) {
            return Err(Error::Geometry(alloc::format!("cell {i} still touches the clipping frame")));
        }
        if cell.area() <= 0.0 {
            return Ok(None);
        }
        Ok(Some(cell))
    }

    /// The part of the domain polygon inside the angular range of `cell`,
    /// closed towards the origin. `None` if the cell spans too wide an angle.
    fn wedge(&self, cell: &Cell) -> Option<Cell> {
        let k = self.poly.points.len();
        let c = cell.centroid();
        let t0 = c[1].atan2(c[0]);
        let mut dmin = f64::INFINITY;
        let mut dmax = f64::NEG_INFINITY;
        let mut rmin = f64::INFINITY;
        for v in &cell.vertices {
            let rho = crate::math::norm(*v);
            if rho < 1e-12 {
                return None;
            }
            rmin = rmin.min(rho);
            let mut d = v[1].atan2(v[0]) - t0;
            while d > PI {
                d -= TAU;
            }
            while d <= -PI {
                d += TAU;
            }
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if dmax - dmin > 0.5 * PI {
            return None;
        }
        // Pad the range so chain ends never sit exactly on a cell vertex ray.
        let pad = 1e-9;
        let start = crate::math::wrap_tau(t0 + dmin - pad);
        // Last polygon vertex at or before `start`.
        let first = match self.poly.angles.partition_point(|&a| a <= start) {
            0 => k - 1,
            j => j - 1,
        };
        let span = dmax - dmin + 2.0 * pad;
        let mut chain = Vec::new();
        let mut idx = first;
        loop {
            chain.push(self.poly.points[idx]);
            let a = self.poly.angles[idx];
            let off = crate::math::wrap_tau(a - start);
            if chain.len() > 1 && off > span && off < PI {
                break;
            }
            if chain.len() > k {
                return None;
            }
            idx = (idx + 1) % k;
        }
        for q in &chain {
            rmin = rmin.min(crate::math::norm(*q));
        }
        let rin = 0.5 * rmin;
        let last = *chain.last().unwrap();
        let firstp = chain[0];
        let scale_to = |q: Point| {
            let r = crate::math::norm(q);
            [q[0] * rin / r, q[1] * rin / r]
        };
        let mut labels = vec![EdgeLabel::Boundary; chain.len() - 1];
        labels.extend([EdgeLabel::Frame; 3]);
        let mut vertices = chain;
        vertices.push(scale_to(last));
        vertices.push(scale_to(firstp));
        Some(Cell { vertices, labels })
    }
}

/// Domain-clipped Voronoi cells of `points`.
pub fn clipped_cells(points: &[Point], domain: &Domain, boundary_spacing: f64) -> Result<Vec<Option<Cell>>> {
    let b = CellBuilder::new(points, domain, boundary_spacing);
    (0..points.len()).map(|i| b.cell(i)).collect()
}
