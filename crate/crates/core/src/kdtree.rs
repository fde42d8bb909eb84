//! Static 2D kd-tree for nearest-neighbour queries.
//!
//! Ties in distance are always broken towards the lower point index, so every
//! query result is a deterministic function of the point list.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::Point;
use crate::math::dist2;

const LEAF: usize = 8;
const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    lo: u32,
    hi: u32,
    axis: u8,
    split: f64,
    left: u32,
    right: u32,
    bmin: Point,
    bmax: Point,
}

#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Point>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut t = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            t.build(0, points.len());
        }
        t
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn build(&mut self, lo: usize, hi: usize) -> u32 {
        let mut bmin = [f64::INFINITY; 2];
        let mut bmax = [f64::NEG_INFINITY; 2];
        for &i in &self.order[lo..hi] {
            let p = self.points[i as usize];
            for a in 0..2 {
                bmin[a] = bmin[a].min(p[a]);
                bmax[a] = bmax[a].max(p[a]);
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { lo: lo as u32, hi: hi as u32, axis: 0, split: 0.0, left: NONE, right: NONE, bmin, bmax });
        if hi - lo <= LEAF {
            return id;
        }
        let axis = if bmax[0] - bmin[0] >= bmax[1] - bmin[1] { 0 } else { 1 };
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            pts[a as usize][axis].total_cmp(&pts[b as usize][axis]).then(a.cmp(&b))
        });
        let split = self.points[self.order[mid] as usize][axis];
        let left = self.build(lo, mid);
        let right = self.build(mid, hi);
        let n = &mut self.nodes[id as usize];
        n.axis = axis as u8;
        n.split = split;
        n.left = left;
        n.right = right;
        id
    }

    fn box_dist2(n: &Node, p: Point) -> f64 {
        let mut d = 0.0;
        for a in 0..2 {
            let v = if p[a] < n.bmin[a] {
                n.bmin[a] - p[a]
            } else if p[a] > n.bmax[a] {
                p[a] - n.bmax[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    /// Index and distance of the closest point; ties go to the lowest index.
    pub fn nearest(&self, p: Point) -> Option<(usize, f64)> {
        self.k_nearest(p, 1).into_iter().next()
    }

    /// The `k` closest points as `(index, distance)`, sorted by distance then index.
    pub fn k_nearest(&self, p: Point, k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Key> = BinaryHeap::with_capacity(k + 1);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id as usize];
            if heap.len() == k {
                let worst = heap.peek().unwrap().0;
                if Self::box_dist2(n, p) > worst {
                    continue;
                }
            }
            if n.left == NONE {
                for &i in &self.order[n.lo as usize..n.hi as usize] {
                    let key = Key(dist2(self.points[i as usize], p), i as usize);
                    if heap.len() < k {
                        heap.push(key);
                    } else if key < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(key);
                    }
                }
            } else {
                // Push the far child first so the near one is explored first.
                let (near, far) = if p[n.axis as usize] < n.split { (n.left, n.right) } else { (n.right, n.left) };
                stack.push(far);
                stack.push(near);
            }
        }
        let mut out: Vec<Key> = heap.into_vec();
        out.sort();
        out.into_iter().map(|Key(d, i)| (i, d.sqrt())).collect()
    }

    /// Indices of all points with distance `< r` (strict), sorted ascending.
    pub fn within(&self, p: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let r2 = r * r;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id as usize];
            if Self::box_dist2(n, p) >= r2 {
                continue;
            }
            if n.left == NONE {
                for &i in &self.order[n.lo as usize..n.hi as usize] {
                    if dist2(self.points[i as usize], p) < r2 {
                        out.push(i as usize);
                    }
                }
            } else {
                stack.push(n.left);
                stack.push(n.right);
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cloud(n: usize) -> Vec<Point> {
        let mut s = 7u64;
        (0..n)
            .map(|_| {
                let mut next = || {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (s >> 11) as f64 / (1u64 << 53) as f64
                };
                [next(), next()]
            })
            .collect()
    }

    #[test]
    fn k_nearest_matches_brute_force() {
        let pts = cloud(500);
        let tree = KdTree::new(&pts);
        for q in cloud(20) {
            let got = tree.k_nearest(q, 13);
            let mut all: Vec<(usize, f64)> = pts.iter().enumerate().map(|(i, &p)| (i, dist2(p, q))).collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let want: Vec<usize> = all[..13].iter().map(|e| e.0).collect();
            assert_eq!(got.iter().map(|e| e.0).collect::<Vec<_>>(), want);
        }
    }

    #[test]
    fn equidistant_tie_goes_to_lower_index() {
        let pts = vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest([0.0, 0.0]).unwrap().0, 0);
        let pts2 = vec![[5.0, 5.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]];
        let tree2 = KdTree::new(&pts2);
        assert_eq!(tree2.nearest([0.0, 0.0]).unwrap().0, 1);
    }

    #[test]
    fn within_radius_is_strict() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.within([0.0, 0.0], 1.0), vec![0, 2]);
    }
}
