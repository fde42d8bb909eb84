use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{GlobalOperator, Method, OperatorMeta, OPS};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::interp::{monomial_count, LocalSystem};
use crate::kdtree::KdTree;
use crate::linalg::{CsrBuilder, Matrix};
use crate::math::{dist, PI};

/// Radius inflation relative to the lattice pitch.
pub const OVERLAP: f64 = 1.25;

/// Disc patches covering the node and evaluation sets.
#[derive(Clone, Debug)]
pub struct PatchCover {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Node indices strictly inside each patch, ascending.
    pub members: Vec<Vec<usize>>,
    /// Patches containing each node.
    pub membership: Vec<Vec<usize>>,
    tree: KdTree,
    max_radius: f64,
}

impl PatchCover {
    /// Cover with the given discs; members are the nodes strictly inside.
    pub fn from_patches(x: &[Point], centers: Vec<Point>, radii: Vec<f64>) -> Self {
        let tree_x = KdTree::new(x);
        let members: Vec<Vec<usize>> = centers.iter().zip(&radii).map(|(&c, &r)| tree_x.within(c, r)).collect();
        let mut membership = vec![Vec::new(); x.len()];
        for (j, mem) in members.iter().enumerate() {
            for &i in mem {
                membership[i].push(j);
            }
        }
        let max_radius = radii.iter().cloned().fold(0.0, f64::max);
        let tree = KdTree::new(&centers);
        PatchCover { centers, radii, members, membership, tree, max_radius }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Patches whose open disc contains `y`.
    pub fn patches_at(&self, y: Point) -> Vec<usize> {
        self.tree
            .within(y, self.max_radius)
            .into_iter()
            .filter(|&j| dist(y, self.centers[j]) < self.radii[j])
            .collect()
    }
}

/// C² Wendland function `(1−r)⁴₊(4r+1)`.
pub fn wendland(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - r).powi(4) * (4.0 * r + 1.0)
    }
}

/// `Φ_j(y)` and its gradient.
fn phi(y: Point, c: Point, radius: f64) -> (f64, Point) {
    let d = [y[0] - c[0], y[1] - c[1]];
    let r = crate::math::norm(d) / radius;
    if r >= 1.0 {
        return (0.0, [0.0, 0.0]);
    }
    let g = -20.0 * (1.0 - r).powi(3) / (radius * radius);
    (wendland(r), [g * d[0], g * d[1]])
}

/// Shepard weight `w_j(y) = Φ_j(y)/Σ Φ_i(y)` and its gradient.
pub fn shepard_weight(y: Point, j: usize, cover: &PatchCover) -> Result<(f64, Point)> {
    let (mut s, mut gs) = (0.0, [0.0, 0.0]);
    for i in cover.patches_at(y) {
        let (v, g) = phi(y, cover.centers[i], cover.radii[i]);
        s += v;
        gs[0] += g[0];
        gs[1] += g[1];
    }
    if !(s > 0.0) {
        return Err(Error::Coverage { points: vec![0], first: y });
    }
    let (v, g) = phi(y, cover.centers[j], cover.radii[j]);
    let w = v / s;
    Ok((w, [(g[0] * s - v * gs[0]) / (s * s), (g[1] * s - v * gs[1]) / (s * s)]))
}

/// Hexagonal lattice of patch centres; patches with fewer than `2m` nodes are
/// absorbed by the nearest remaining patch, which grows to contain their disc.
pub fn build_patch_cover(x: &[Point], y: &[Point], p: usize, target: usize) -> Result<PatchCover> {
    let m = monomial_count(p, 2);
    if target < 2 * m {
        return Err(Error::config(format!("target patch size {target} is below 2m = {}", 2 * m)));
    }
    if x.len() < 2 * m {
        return Err(Error::config(format!("{} nodes cannot fill a patch of {} nodes", x.len(), 2 * m)));
    }
    let tree_x = KdTree::new(x);
    // Node density from the hexagonal cell area of the mean nearest-neighbour distance.
    let mean_nn = x.iter().map(|&p| tree_x.k_nearest(p, 2)[1].1).sum::<f64>() / x.len() as f64;
    let density = 1.0 / (0.5 * 3.0f64.sqrt() * mean_nn * mean_nn);
    let radius = (target as f64 / (PI * density)).sqrt();
    let pitch = radius / OVERLAP;

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for q in x.iter().chain(y) {
        for a in 0..2 {
            lo[a] = lo[a].min(q[a]);
            hi[a] = hi[a].max(q[a]);
        }
    }
    let tree_y = KdTree::new(y);
    let row_h = 0.5 * 3.0f64.sqrt() * pitch;
    let nr = ((hi[1] - lo[1]) / row_h).ceil() as usize + 1;
    let nc = ((hi[0] - lo[0]) / pitch).ceil() as usize + 1;
    let mut centers = Vec::new();
    for r in 0..=nr {
        for c in 0..=nc {
            let shift = if r % 2 == 1 { 0.5 * pitch } else { 0.0 };
            let ctr = [lo[0] + c as f64 * pitch + shift - 0.5 * pitch, lo[1] + r as f64 * row_h - 0.5 * row_h];
            let touches = tree_x.nearest(ctr).map_or(false, |e| e.1 < radius)
                || tree_y.nearest(ctr).map_or(false, |e| e.1 < radius);
            if touches {
                centers.push(ctr);
            }
        }
    }
    let mut radii = vec![radius; centers.len()];
    let mut counts: Vec<usize> = centers.iter().map(|&c| tree_x.within(c, radius).len()).collect();
    let mut alive = vec![true; centers.len()];
    loop {
        let Some(k) = (0..centers.len()).find(|&k| alive[k] && counts[k] < 2 * m) else { break };
        alive[k] = false;
        let j = (0..centers.len())
            .filter(|&j| alive[j])
            .min_by(|&a, &b| {
                dist(centers[a], centers[k]).total_cmp(&dist(centers[b], centers[k])).then(a.cmp(&b))
            })
            .ok_or_else(|| Error::config("patch cover collapsed to nothing"))?;
        radii[j] = radii[j].max(dist(centers[j], centers[k]) + radii[k]);
        counts[j] = tree_x.within(centers[j], radii[j]).len();
    }
    let keep: Vec<usize> = (0..centers.len()).filter(|&k| alive[k]).collect();
    let cover = PatchCover::from_patches(
        x,
        keep.iter().map(|&k| centers[k]).collect(),
        keep.iter().map(|&k| radii[k]).collect(),
    );
    let missing: Vec<usize> = (0..y.len()).filter(|&k| cover.patches_at(y[k]).is_empty()).collect();
    if let Some(&first) = missing.first() {
        return Err(Error::Coverage { first: y[first], points: missing });
    }
    if let Some(i) = (0..x.len()).find(|&i| cover.membership[i].is_empty()) {
        return Err(Error::Coverage { points: vec![i], first: x[i] });
    }
    Ok(cover)
}

/// Shepard blend of per-patch interpolants; derivative rows use the product rule.
pub fn build_pum(x: &[Point], y: &[Point], p: usize, cover: &PatchCover) -> Result<GlobalOperator> {
    let mut systems = Vec::with_capacity(cover.len());
    for (j, mem) in cover.members.iter().enumerate() {
        let pts: Vec<Point> = mem.iter().map(|&i| x[i]).collect();
        systems.push(LocalSystem::assemble(&pts, p, &format!("patch {j}"))?);
    }
    let n = x.len();
    let mut acc = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut mark = vec![usize::MAX; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut builders: Vec<CsrBuilder> = (0..3).map(|_| CsrBuilder::new(n)).collect();
    let mut missing = Vec::new();
    let mut work = Vec::new();
    let mut psi = [Vec::new(), Vec::new(), Vec::new()];
    for (k, &yk) in y.iter().enumerate() {
        let patches = cover.patches_at(yk);
        let mut vals = Vec::with_capacity(patches.len());
        let (mut s, mut gs) = (0.0, [0.0, 0.0]);
        for &j in &patches {
            let (v, g) = phi(yk, cover.centers[j], cover.radii[j]);
            s += v;
            gs[0] += g[0];
            gs[1] += g[1];
            vals.push((v, g));
        }
        if !(s > 0.0) {
            missing.push(k);
            for b in builders.iter_mut() {
                b.push_row([]);
            }
            continue;
        }
        touched.clear();
        for (&j, &(v, g)) in patches.iter().zip(&vals) {
            let w = v / s;
            let gw = [(g[0] * s - v * gs[0]) / (s * s), (g[1] * s - v * gs[1]) / (s * s)];
            let mem = &cover.members[j];
            for (o, &op) in OPS.iter().enumerate() {
                psi[o].resize(mem.len(), 0.0);
                systems[j].weights_into(op, yk, &mut psi[o], &mut work);
            }
            for (l, &i) in mem.iter().enumerate() {
                if mark[i] != k {
                    mark[i] = k;
                    touched.push(i);
                    acc[0][i] = 0.0;
                    acc[1][i] = 0.0;
                    acc[2][i] = 0.0;
                }
                acc[0][i] += w * psi[0][l];
                acc[1][i] += gw[0] * psi[0][l] + w * psi[1][l];
                acc[2][i] += gw[1] * psi[0][l] + w * psi[2][l];
            }
        }
        for (o, b) in builders.iter_mut().enumerate() {
            b.push_row(touched.iter().map(|&i| (i, acc[o][i])));
        }
    }
    if let Some(&first) = missing.first() {
        return Err(Error::Coverage { first: y[first], points: missing });
    }
    let mut mats = builders.into_iter().map(|b| Matrix::Sparse(b.finish()));
    Ok(GlobalOperator {
        meta: OperatorMeta {
            method: Method::Pum,
            degree: p,
            local_size: None,
            patches: Some(cover.len()),
            nodes: n,
            evals: y.len(),
        },
        e: mats.next().unwrap(),
        d1: mats.next().unwrap(),
        d2: mats.next().unwrap(),
    })
}
