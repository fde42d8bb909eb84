use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{GlobalOperator, Method, OperatorMeta, OPS};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::interp::{monomial_count, LocalSystem, Op};
use crate::kdtree::KdTree;
use crate::linalg::{CsrBuilder, Matrix};

/// One stencil of the `n` nearest nodes per node, with its factorized system.
#[derive(Clone, Debug)]
pub struct FdStencils {
    pub degree: usize,
    pub size: usize,
    /// `stencils[i]` lists node indices by increasing distance from node `i`.
    pub stencils: Vec<Vec<usize>>,
    systems: Vec<LocalSystem<2>>,
    nodes: Vec<Point>,
    tree: KdTree,
}

impl FdStencils {
    pub fn build(x: &[Point], p: usize, n: usize) -> Result<Self> {
        let m = monomial_count(p, 2);
        if n < m || n > x.len() {
            return Err(Error::config(format!(
                "stencil size {n} must lie between {m} and the node count {}",
                x.len()
            )));
        }
        let tree = KdTree::new(x);
        let mut stencils = Vec::with_capacity(x.len());
        let mut systems = Vec::with_capacity(x.len());
        for (i, &xi) in x.iter().enumerate() {
            let mut s: Vec<usize> = tree.k_nearest(xi, n).into_iter().map(|e| e.0).collect();
            if s[0] != i {
                // Coincident nodes would put another index first; keep the owner in front.
                match s.iter().position(|&j| j == i) {
                    Some(k) => s.swap(0, k),
                    None => return Err(Error::Geometry(format!("node {i} is missing from its own stencil"))),
                }
            }
            let pts: Vec<Point> = s.iter().map(|&j| x[j]).collect();
            systems.push(LocalSystem::assemble(&pts, p, &format!("stencil of node {i}"))?);
            stencils.push(s);
        }
        Ok(FdStencils { degree: p, size: n, stencils, systems, nodes: x.to_vec(), tree })
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Index of the closest node; ties go to the lowest index.
    pub fn owner(&self, y: Point) -> usize {
        self.tree.nearest(y).expect("stencil set is empty").0
    }

    pub fn system(&self, i: usize) -> &LocalSystem<2> {
        &self.systems[i]
    }

    /// Weights of stencil `i` at `y` as `(global node, weight)` pairs.
    pub fn weights(&self, i: usize, op: Op, y: Point) -> Vec<(usize, f64)> {
        let w = self.systems[i].weights(op, y);
        self.stencils[i].iter().copied().zip(w).collect()
    }
}

pub fn build_fd(x: &[Point], y: &[Point], p: usize, n: usize) -> Result<GlobalOperator> {
    let st = FdStencils::build(x, p, n)?;
    Ok(build_fd_with(&st, y))
}

/// Rows taken from the stencil of the node closest to each evaluation point.
pub fn build_fd_with(st: &FdStencils, y: &[Point]) -> GlobalOperator {
    let n = st.size;
    let mut builders: Vec<CsrBuilder> = (0..3).map(|_| CsrBuilder::with_capacity(st.len(), y.len(), y.len() * n)).collect();
    let mut w = vec![0.0; n];
    let mut work = Vec::new();
    for &yk in y {
        let owner = st.owner(yk);
        let sys = &st.systems[owner];
        for (b, &op) in builders.iter_mut().zip(&OPS) {
            sys.weights_into(op, yk, &mut w, &mut work);
            b.push_row(st.stencils[owner].iter().copied().zip(w.iter().copied()));
        }
    }
    let mut mats = builders.into_iter().map(|b| Matrix::Sparse(b.finish()));
    GlobalOperator {
        meta: OperatorMeta {
            method: Method::Fd,
            degree: st.degree,
            local_size: Some(n),
            patches: None,
            nodes: st.len(),
            evals: y.len(),
        },
        e: mats.next().unwrap(),
        d1: mats.next().unwrap(),
        d2: mats.next().unwrap(),
    }
}
