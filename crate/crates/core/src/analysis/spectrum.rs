use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::seq::SliceRandom;

use super::{build_case, Case};
use crate::advection::{SemiDiscreteSystem, VelocityField};
use crate::error::{Error, Result};
use crate::linalg::eigen::{residual, Hessenberg};
use crate::linalg::{DenseMatrix, Lu, Matrix};
use crate::math::norm;

/// Largest reduced system accepted for a dense eigensolve.
pub const MAX_SPECTRUM_SIZE: usize = 6000;

/// `|1 + z + z²/2 + z³/6 + z⁴/24|`.
pub fn rk4_amplification(z: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    (one + z * (one + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))).norm()
}

/// `x > 0` with `|R(−x)| = 1`, about 2.7853.
pub fn rk4_real_boundary() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rk4_amplification(Complex64::new(-mid, 0.0)) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `A(t*) = (ĒᵀĒ)⁻¹(−ĒᵀD̄(t*) + γP)`, without boundary elimination.
pub fn ode_matrix_full(sys: &SemiDiscreteSystem, t: f64, penalty: bool) -> Result<DenseMatrix> {
    let n = sys.len();
    if n > MAX_SPECTRUM_SIZE {
        return Err(Error::TooLarge { size: n, limit: MAX_SPECTRUM_SIZE });
    }
    let f = sys.velocity.eval(t);
    let (k1, k2) = sys.flux_parts();
    let mut b = DenseMatrix::zeros(n, n);
    for (m, s) in [(k1, -f[0]), (k2, -f[1])] {
        add_scaled(&mut b, m, s);
    }
    if penalty {
        if let Some((p, gamma)) = sys.penalty() {
            add_scaled(&mut b, &Matrix::Sparse(p.clone()), gamma);
        }
    }
    let lu = Lu::factor(sys.mass().to_dense(), "mass matrix")?;
    lu.solve_matrix(&mut b);
    Ok(b)
}

fn add_scaled(b: &mut DenseMatrix, m: &Matrix, s: f64) {
    if s == 0.0 {
        return;
    }
    match m {
        Matrix::Dense(d) => {
            for (x, y) in b.as_mut_slice().iter_mut().zip(d.as_slice()) {
                *x += s * y;
            }
        }
        Matrix::Sparse(c) => {
            let n = b.cols();
            let out = b.as_mut_slice();
            for i in 0..c.rows() {
                for (j, v) in c.row(i) {
                    out[i * n + j] += s * v;
                }
            }
        }
    }
}

/// ODE matrix with the rows and columns of inflow nodes removed.
#[derive(Clone, Debug)]
pub struct ReducedOde {
    pub matrix: DenseMatrix,
    /// Original node index of each remaining row.
    pub kept: Vec<usize>,
}

pub fn ode_matrix(sys: &SemiDiscreteSystem, t: f64, penalty: bool) -> Result<ReducedOde> {
    let mut inflow = vec![false; sys.len()];
    for i in sys.inflow(t) {
        inflow[i] = true;
    }
    let kept: Vec<usize> = (0..sys.len()).filter(|&i| !inflow[i]).collect();
    if kept.len() > MAX_SPECTRUM_SIZE {
        return Err(Error::TooLarge { size: kept.len(), limit: MAX_SPECTRUM_SIZE });
    }
    let full = ode_matrix_full(sys, t, penalty)?;
    Ok(ReducedOde { matrix: full.submatrix(&kept, &kept), kept })
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub dt: f64,
    /// `|R(λΔt)| ≤ 1` per eigenvalue.
    pub stable: Vec<bool>,
    pub unstable: usize,
    /// Largest `‖Av − λv‖/‖A‖_F` over the spot-checked pairs.
    pub max_residual: f64,
}

impl SpectrumReport {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigenvalues of `a`, classified against the RK4 region at step `dt`.
/// Ten eigenpairs chosen with `seed` are checked to `‖Av − λv‖ ≤ 1e-7‖A‖_F`.
pub fn spectrum(a: &DenseMatrix, dt: f64, seed: u64) -> Result<SpectrumReport> {
    if a.rows() > MAX_SPECTRUM_SIZE {
        return Err(Error::TooLarge { size: a.rows(), limit: MAX_SPECTRUM_SIZE });
    }
    let hess = Hessenberg::new(a);
    let eigenvalues = hess.eigenvalues()?;
    let fro = a.norm_fro();
    let mut idx: Vec<usize> = (0..eigenvalues.len()).collect();
    idx.shuffle(&mut crate::rng(seed));
    let mut max_residual = 0.0f64;
    for &k in idx.iter().take(10) {
        let v = hess.eigenvector(eigenvalues[k]);
        let r = if fro > 0.0 { residual(a, eigenvalues[k], &v) / fro } else { 0.0 };
        max_residual = max_residual.max(r);
    }
    if max_residual > 1e-7 {
        return Err(Error::EigenResidual { residual: max_residual, bound: 1e-7 });
    }
    let stable: Vec<bool> = eigenvalues.iter().map(|&z| rk4_amplification(z * dt) <= 1.0).collect();
    let unstable = stable.iter().filter(|s| !**s).count();
    Ok(SpectrumReport { eigenvalues, dt, stable, unstable, max_residual })
}

/// Spectrum per `q` at `t* = 0` with `Δt = cfl·h/‖F′(0)‖`.
pub fn run_spectrum_suite(base: &Case, qs: &[usize], cfl: f64) -> Result<Vec<(usize, SpectrumReport)>> {
    let velocity = VelocityField::Rotational;
    let dt = cfl * base.h / norm(velocity.eval(0.0));
    let mut out = Vec::with_capacity(qs.len());
    for &q in qs {
        let case = Case { q, ..*base };
        let setup = build_case(&case, velocity)?;
        let a = ode_matrix(&setup.system, 0.0, case.penalty)?;
        out.push((q, spectrum(&a.matrix, dt, case.seed)?));
    }
    Ok(out)
}

/// Largest CFL keeping every `λΔt` inside the RK4 region, `Δt = cfl·h/speed`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxCfl {
    pub cfl: f64,
    /// False if no positive CFL is stable (some `Re λ > 0`).
    pub stable: bool,
}

pub fn max_cfl(eigenvalues: &[Complex64], h: f64, speed: f64) -> MaxCfl {
    let ok = |cfl: f64| {
        let dt = cfl * h / speed;
        eigenvalues.iter().all(|&z| rk4_amplification(z * dt) <= 1.0)
    };
    if eigenvalues.iter().any(|z| z.re > 0.0) {
        return MaxCfl { cfl: 0.0, stable: false };
    }
    let mut hi = 1.0;
    let mut lo;
    if ok(hi) {
        lo = hi;
        hi *= 2.0;
        while ok(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return MaxCfl { cfl: f64::INFINITY, stable: true };
            }
        }
    } else {
        let mut k = 0;
        while !ok(0.5 * hi) {
            hi *= 0.5;
            k += 1;
            if k > 80 {
                return MaxCfl { cfl: 0.0, stable: false };
            }
        }
        lo = 0.5 * hi;
    }
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MaxCfl { cfl: lo, stable: true }
}
