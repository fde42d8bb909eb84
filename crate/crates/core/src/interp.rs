//! Local cubic polyharmonic-spline interpolation with polynomial augmentation.
//!
//! A [`LocalSystem`] holds the factorized saddle-point matrix
//! `Ã = [A P; Pᵀ 0]` of one stencil and returns weight vectors `w` such that
//! `Σ wᵢ u(xᵢ)` evaluates the interpolant (or one of its first derivatives) at
//! a point `y`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::math::binomial;

/// Evaluation functional applied to the interpolant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Value,
    /// Partial derivative along the given axis (0 = `y₁`).
    Deriv(usize),
}

/// `φ(r) = r³`.
#[inline]
pub fn phs(r: f64) -> f64 {
    r * r * r
}

/// Gradient of `x ↦ ‖x − x_l‖³`, given `d = x − x_l`.
#[inline]
pub fn phs_grad<const D: usize>(d: [f64; D]) -> [f64; D] {
    let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    d.map(|v| 3.0 * r * v)
}

/// Monomials of total degree `≤ p` in `D` variables, ordered by total degree,
/// then lexicographically with the first variable's power descending.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis<const D: usize> {
    degree: usize,
    exps: Vec<[u32; D]>,
}

impl<const D: usize> MonomialBasis<D> {
    pub fn new(degree: usize) -> Self {
        let mut exps = Vec::new();
        for total in 0..=degree as u32 {
            let mut cur = [0u32; D];
            push_exps(&mut exps, &mut cur, 0, total);
        }
        MonomialBasis { degree, exps }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `m = C(p + D, D)`.
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; D]] {
        &self.exps
    }

    /// Values of `op` applied to every monomial at `x`.
    pub fn eval(&self, op: Op, x: [f64; D], out: &mut [f64]) {
        let p = self.degree;
        let mut pw = [[0.0f64; 16]; D];
        for a in 0..D {
            pw[a][0] = 1.0;
            for k in 1..=p {
                pw[a][k] = pw[a][k - 1] * x[a];
            }
        }
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let mut v = 1.0;
            for a in 0..D {
                let k = e[a] as usize;
                match op {
                    Op::Deriv(axis) if axis == a => {
                        if k == 0 {
                            v = 0.0;
                        } else {
                            v *= k as f64 * pw[a][k - 1];
                        }
                    }
                    _ => v *= pw[a][k],
                }
            }
            *o = v;
        }
    }
}

fn push_exps<const D: usize>(out: &mut Vec<[u32; D]>, cur: &mut [u32; D], axis: usize, left: u32) {
    if axis == D - 1 {
        cur[axis] = left;
        out.push(*cur);
        return;
    }
    for k in (0..=left).rev() {
        cur[axis] = k;
        push_exps(out, cur, axis + 1, left - k);
    }
}

/// Number of monomials of degree `≤ p` in `d` variables.
pub fn monomial_count(p: usize, d: usize) -> usize {
    binomial(p + d, d)
}

/// Factorized local interpolation problem for one stencil or patch.
#[derive(Clone, Debug)]
pub struct LocalSystem<const D: usize> {
    center: [f64; D],
    scale: f64,
    local: Vec<[f64; D]>,
    basis: MonomialBasis<D>,
    saddle: DenseMatrix,
    lu: Lu,
    /// Orthonormal basis of `range(P)` (`n × m`) and the triangular factor of `P = Q R`.
    q: DenseMatrix,
    r: DenseMatrix,
}

impl<const D: usize> LocalSystem<D> {
    /// Shifts the points to their centroid, scales by the largest radius and
    /// factorizes the saddle matrix. `context` names the stencil in errors.
    pub fn assemble(points: &[[f64; D]], degree: usize, context: &str) -> Result<Self> {
        let n = points.len();
        let basis = MonomialBasis::<D>::new(degree);
        let m = basis.len();
        if n < m {
            return Err(Error::Config(format!("{context}: {n} points cannot carry {m} monomials")));
        }
        let mut center = [0.0; D];
        for x in points {
            for a in 0..D {
                center[a] += x[a];
            }
        }
        center.iter_mut().for_each(|c| *c /= n as f64);
        let scale = points
            .iter()
            .map(|x| (0..D).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt();
        if !(scale > 0.0) {
            return Err(Error::Unisolvent { context: String::from(context), degree });
        }
        let local: Vec<[f64; D]> =
            points.iter().map(|x| core::array::from_fn(|a| (x[a] - center[a]) / scale)).collect();

        let mut pmat = DenseMatrix::zeros(n, m);
        for (j, x) in local.iter().enumerate() {
            basis.eval(Op::Value, *x, pmat.row_mut(j));
        }
        let (q, r) = orthonormalize(&pmat)
            .ok_or_else(|| Error::Unisolvent { context: String::from(context), degree })?;

        let size = n + m;
        let mut saddle = DenseMatrix::zeros(size, size);
        for j in 0..n {
            for l in 0..j {
                let d2: f64 = (0..D).map(|a| (local[j][a] - local[l][a]).powi(2)).sum();
                let v = phs(d2.sqrt());
                saddle[(j, l)] = v;
                saddle[(l, j)] = v;
            }
            for k in 0..m {
                saddle[(j, n + k)] = pmat[(j, k)];
                saddle[(n + k, j)] = pmat[(j, k)];
            }
        }
        let lu = Lu::factor(saddle.clone(), context)?;
        Ok(LocalSystem { center, scale, local, basis, saddle, lu, q, r })
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    pub fn basis(&self) -> &MonomialBasis<D> {
        &self.basis
    }

    /// The assembled `(n+m)×(n+m)` saddle matrix in local coordinates.
    pub fn saddle_matrix(&self) -> &DenseMatrix {
        &self.saddle
    }

    pub fn center(&self) -> [f64; D] {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn to_local(&self, y: [f64; D]) -> [f64; D] {
        core::array::from_fn(|a| (y[a] - self.center[a]) / self.scale)
    }

    /// Right-hand side `b(y)` in local coordinates.
    fn rhs(&self, op: Op, yl: [f64; D], out: &mut [f64]) {
        let n = self.len();
        for (l, x) in self.local.iter().enumerate() {
            let d: [f64; D] = core::array::from_fn(|a| yl[a] - x[a]);
            out[l] = match op {
                Op::Value => phs(d.iter().map(|v| v * v).sum::<f64>().sqrt()),
                Op::Deriv(axis) => phs_grad(d)[axis],
            };
        }
        self.basis.eval(op, yl, &mut out[n..]);
    }

    /// Projects `w` onto `{w : Pᵀw = g}` along `range(P)`; removes rounding
    /// drift from the moment conditions the exact weights satisfy.
    fn enforce_moments(&self, w: &mut [f64], g: &[f64]) {
        let n = self.len();
        let m = self.basis.len();
        let mut buf = [0.0f64; 64];
        if m > 64 {
            return self.enforce_moments_alloc(w, g);
        }
        let d = &mut buf[..m];
        moment_residual(&self.q, &self.r, w, g, n, m, d);
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += crate::math::dot(self.q.row(j), d);
        }
    }

    fn enforce_moments_alloc(&self, w: &mut [f64], g: &[f64]) {
        let n = self.len();
        let m = self.basis.len();
        let mut d = vec![0.0; m];
        moment_residual(&self.q, &self.r, w, g, n, m, &mut d);
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += crate::math::dot(self.q.row(j), &d);
        }
    }

    /// Weights of `op` at `y` (global coordinates).
    pub fn weights(&self, op: Op, y: [f64; D]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut work = Vec::new();
        self.weights_into(op, y, &mut out, &mut work);
        out
    }

    /// Allocation-free variant of [`weights`](Self::weights); `work` is scratch.
    pub fn weights_into(&self, op: Op, y: [f64; D], out: &mut [f64], work: &mut Vec<f64>) {
        let n = self.len();
        let m = self.basis.len();
        work.resize(n + m, 0.0);
        let yl = self.to_local(y);
        self.rhs(op, yl, work);
        let g: Vec<f64> = work[n..].to_vec();
        self.lu.solve(work);
        out.copy_from_slice(&work[..n]);
        self.enforce_moments(out, &g);
        if let Op::Deriv(_) = op {
            let s = 1.0 / self.scale;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Weight matrices (`ys.len() × n`, one per operator) for many points at once,
    /// solved with blocked multi-right-hand-side substitution.
    pub fn weight_matrices(&self, ops: &[Op], ys: &[[f64; D]]) -> Vec<DenseMatrix> {
        let n = self.len();
        let m = self.basis.len();
        let nops = ops.len();
        let mut out: Vec<DenseMatrix> = ops.iter().map(|_| DenseMatrix::zeros(ys.len(), n)).collect();
        const CHUNK: usize = 1024;
        let mut col = vec![0.0; n + m];
        for (c0, chunk) in ys.chunks(CHUNK).enumerate() {
            let cols = chunk.len() * nops;
            let mut b = DenseMatrix::zeros(n + m, cols);
            let mut targets = DenseMatrix::zeros(cols, m);
            for (k, y) in chunk.iter().enumerate() {
                let yl = self.to_local(*y);
                for (o, &op) in ops.iter().enumerate() {
                    let c = k * nops + o;
                    self.rhs(op, yl, &mut col);
                    for i in 0..n + m {
                        b[(i, c)] = col[i];
                    }
                    targets.row_mut(c).copy_from_slice(&col[n..]);
                }
            }
            self.lu.solve_matrix(&mut b);
            let bt = b.transpose();
            for (k, _) in chunk.iter().enumerate() {
                for (o, &op) in ops.iter().enumerate() {
                    let c = k * nops + o;
                    let row = out[o].row_mut(c0 * CHUNK + k);
                    row.copy_from_slice(&bt.row(c)[..n]);
                    self.enforce_moments(row, targets.row(c));
                    if let Op::Deriv(_) = op {
                        let s = 1.0 / self.scale;
                        row.iter_mut().for_each(|v| *v *= s);
                    }
                }
            }
        }
        out
    }
}

/// `d ← R⁻ᵀ (g − Pᵀ w)` with `P = Q R`.
fn moment_residual(q: &DenseMatrix, r: &DenseMatrix, w: &[f64], g: &[f64], n: usize, m: usize, d: &mut [f64]) {
    // Pᵀ w = Rᵀ Qᵀ w; work with Qᵀ w directly: d = R⁻ᵀ g − Qᵀ w.
    let mut qtw = [0.0f64; 64];
    let mut heap;
    let qtw: &mut [f64] = if m <= 64 {
        &mut qtw[..m]
    } else {
        heap = vec![0.0; m];
        &mut heap
    };
    for j in 0..n {
        crate::math::axpy(w[j], q.row(j), qtw);
    }
    for k in 0..m {
        let mut s = g[k];
        for i in 0..k {
            s -= r[(i, k)] * d[i];
        }
        d[k] = s / r[(k, k)];
    }
    for k in 0..m {
        d[k] -= qtw[k];
    }
}

/// Thin QR of `P` by twice-iterated Gram–Schmidt; `None` if the columns are
/// numerically dependent.
fn orthonormalize(p: &DenseMatrix) -> Option<(DenseMatrix, DenseMatrix)> {
    let (n, m) = (p.rows(), p.cols());
    let mut q = DenseMatrix::zeros(n, m);
    let mut r = DenseMatrix::zeros(m, m);
    let mut v = vec![0.0; n];
    for k in 0..m {
        for j in 0..n {
            v[j] = p[(j, k)];
        }
        let norm0 = crate::math::norm2_slice(&v);
        if norm0 == 0.0 {
            return None;
        }
        for _ in 0..2 {
            for i in 0..k {
                let c: f64 = (0..n).map(|j| q[(j, i)] * v[j]).sum();
                r[(i, k)] += c;
                for j in 0..n {
                    v[j] -= c * q[(j, i)];
                }
            }
        }
        let nv = crate::math::norm2_slice(&v);
        if nv <= 1e-9 * norm0 {
            return None;
        }
        r[(k, k)] = nv;
        for j in 0..n {
            q[(j, k)] = v[j] / nv;
        }
    }
    Some((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spread(n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| {
                let t = k as f64 * 2.399963;
                let r = 0.1 * ((k as f64 + 0.5) / n as f64).sqrt();
                [0.3 + r * t.cos(), 0.1 + r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn basis_ordering_and_count() {
        let b = MonomialBasis::<2>::new(2);
        assert_eq!(b.exponents(), &[[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]);
        for p in 0..8 {
            assert_eq!(MonomialBasis::<2>::new(p).len(), (p + 1) * (p + 2) / 2);
            assert_eq!(MonomialBasis::<1>::new(p).len(), p + 1);
        }
    }

    #[test]
    fn phs_values_and_gradient() {
        assert_eq!(phs(0.0), 0.0);
        assert_eq!(phs(2.0), 8.0);
        assert_eq!(phs_grad([1.0, 0.0]), [3.0, 0.0]);
        // Finite-difference oracle.
        let h = 1e-6;
        let x = [0.4, -0.7];
        let g = phs_grad(x);
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let f = |p: [f64; 2]| phs((p[0] * p[0] + p[1] * p[1]).sqrt());
            let fd = (f(xp) - f(xm)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-5);
        }
    }

    #[test]
    fn collinear_points_are_rejected() {
        let pts: Vec<[f64; 2]> = (0..6).map(|k| [k as f64 * 0.1, 0.2 * k as f64 * 0.1 + 0.3]).collect();
        let err = LocalSystem::assemble(&pts, 2, "stencil 7").unwrap_err();
        assert!(matches!(err, Error::Unisolvent { ref context, degree: 2 } if context == "stencil 7"));
    }

    #[test]
    fn saddle_is_symmetric_and_cardinal() {
        let pts = spread(12);
        let sys = LocalSystem::assemble(&pts, 2, "t").unwrap();
        let a = sys.saddle_matrix();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert_eq!(a[(i, j)], a[(j, i)]);
            }
        }
        for (j, &x) in pts.iter().enumerate() {
            let w = sys.weights(Op::Value, x);
            for (i, wi) in w.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((wi - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_of_square_at_fixed_point() {
        let pts = spread(12);
        let sys = LocalSystem::assemble(&pts, 2, "t").unwrap();
        let w = sys.weights(Op::Deriv(0), [0.3, 0.1]);
        let s: f64 = w.iter().zip(&pts).map(|(wi, x)| wi * x[0] * x[0]).sum();
        assert!((s - 0.6).abs() < 1e-8);
        let w0 = sys.weights(Op::Value, [0.31, 0.12]);
        assert!((w0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batch_weights_match_single() {
        let pts = spread(30);
        let sys = LocalSystem::assemble(&pts, 4, "t").unwrap();
        let ys: Vec<[f64; 2]> = (0..7).map(|k| [0.28 + 0.01 * k as f64, 0.09]).collect();
        let ops = [Op::Value, Op::Deriv(0), Op::Deriv(1)];
        let mats = sys.weight_matrices(&ops, &ys);
        for (o, &op) in ops.iter().enumerate() {
            for (k, &y) in ys.iter().enumerate() {
                let w = sys.weights(op, y);
                for (a, b) in w.iter().zip(mats[o].row(k)) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
