//! Domain-clipped Voronoi diagram of the nodes and the jump penalty built on its interior edges.

pub mod cell;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use cell::{clipped_cells, Cell, EdgeLabel};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::interp::{monomial_count, LocalSystem, Op};
use crate::kdtree::KdTree;
use crate::linalg::{CsrBuilder, CsrMatrix};
use crate::methods::FdStencils;
use crate::math::dist;

/// Edge shared by the cells of nodes `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorEdge {
    pub i: usize,
    pub j: usize,
    pub a: Point,
    pub b: Point,
    pub midpoint: Point,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct VoronoiDiagram {
    /// `None` for a node whose cell vanished after clipping.
    pub cells: Vec<Option<Cell>>,
    pub edges: Vec<InteriorEdge>,
    /// Mean interior edge length.
    pub h_edge: f64,
}

impl VoronoiDiagram {
    pub fn midpoints(&self) -> Vec<Point> {
        self.edges.iter().map(|e| e.midpoint).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().flatten().map(Cell::area).sum()
    }
}

/// Voronoi cells of `x` clipped to `domain`, whose boundary is polygonized at `h/4`.
pub fn build_voronoi(x: &[Point], domain: &Domain) -> Result<VoronoiDiagram> {
    if x.len() < 2 {
        return Err(Error::Geometry(format!("{} nodes do not form a diagram", x.len())));
    }
    let tree = KdTree::new(x);
    let h = x.iter().map(|&p| tree.k_nearest(p, 2)[1].1).sum::<f64>() / x.len() as f64;
    let cells = clipped_cells(x, domain, 0.25 * h)?;
    let tol = 1e-12 * h;
    let mut map: BTreeMap<(usize, usize), InteriorEdge> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        let Some(c) = c else { continue };
        for (k, &label) in c.labels.iter().enumerate() {
            let EdgeLabel::Neighbor(j) = label else { continue };
            let key = (i.min(j), i.max(j));
            if map.contains_key(&key) {
                continue;
            }
            let (a, b) = c.edge(k);
            let length = dist(a, b);
            if length < tol {
                continue;
            }
            let midpoint = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            map.insert(key, InteriorEdge { i: key.0, j: key.1, a, b, midpoint, length });
        }
    }
    let edges: Vec<InteriorEdge> = map.into_values().collect();
    if edges.is_empty() {
        return Err(Error::Geometry("diagram has no interior edges".into()));
    }
    let h_edge = edges.iter().map(|e| e.length).sum::<f64>() / edges.len() as f64;
    Ok(VoronoiDiagram { cells, edges, h_edge })
}

/// `P = JᵀJ` with `J = E₊ − E₋` at the edge midpoints.
#[derive(Clone, Debug)]
pub struct PenaltyOperator {
    pub p: CsrMatrix,
    /// Jump functionals, one row per interior edge.
    pub jump: CsrMatrix,
    /// Always `−h_edge`.
    pub gamma: f64,
}

/// The `+` side of edge `(i, j)` uses the stencil of `i`, the `−` side that of `j`.
pub fn assemble_penalty(vd: &VoronoiDiagram, st: &FdStencils) -> PenaltyOperator {
    let n = st.len();
    let mut b = CsrBuilder::with_capacity(n, vd.edges.len(), 2 * st.size * vd.edges.len());
    for e in &vd.edges {
        let plus = st.weights(e.i, Op::Value, e.midpoint);
        let minus = st.weights(e.j, Op::Value, e.midpoint);
        b.push_row(plus.into_iter().chain(minus.into_iter().map(|(k, w)| (k, -w))));
    }
    let jump = b.finish();
    let p = jump.transpose().matmul(&jump);
    PenaltyOperator { p, jump, gamma: -vd.h_edge }
}

/// Largest jump of the cardinal function of the node nearest 0.4 across the
/// cell boundaries of `nodes` equispaced nodes on `[0, 1]`.
pub fn jump_magnitude_1d(nodes: usize, n: usize, p: usize) -> Result<f64> {
    let m = monomial_count(p, 1);
    if nodes < 2 || n > nodes || n < m {
        return Err(Error::config(format!(
            "stencil size {n} must lie between {m} and the node count {nodes}"
        )));
    }
    let x: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
    // Selected by index distance, then stored in index order so equal node
    // sets give bit-identical systems.
    let stencil = |i: usize| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..nodes).collect();
        idx.sort_by_key(|&k| (k.abs_diff(i), k));
        idx.truncate(n);
        idx.sort_unstable();
        idx
    };
    let center = (0..nodes)
        .min_by(|&a, &b| (x[a] - 0.4).abs().total_cmp(&(x[b] - 0.4).abs()).then(a.cmp(&b)))
        .unwrap();
    let mut cache: Vec<Option<(Vec<usize>, LocalSystem<1>)>> = vec![None; nodes];
    let mut value = |i: usize, y: f64| -> Result<f64> {
        if cache[i].is_none() {
            let s = stencil(i);
            let pts: Vec<[f64; 1]> = s.iter().map(|&k| [x[k]]).collect();
            let sys = LocalSystem::assemble(&pts, p, &format!("1D stencil of node {i}"))?;
            cache[i] = Some((s, sys));
        }
        let (s, sys) = cache[i].as_ref().unwrap();
        Ok(match s.iter().position(|&k| k == center) {
            Some(l) => sys.weights(Op::Value, [y])[l],
            None => 0.0,
        })
    };
    let mut worst = 0.0f64;
    for k in 0..nodes - 1 {
        let mid = 0.5 * (x[k] + x[k + 1]);
        let jump = (value(k, mid)? - value(k + 1, mid)?).abs();
        worst = worst.max(jump);
    }
    Ok(worst)
}
