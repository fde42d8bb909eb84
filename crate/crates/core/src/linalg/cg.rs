use alloc::vec;

use crate::error::{Error, Result};
use crate::math::{dot, norm2_slice};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖b − A x‖ ≤ tol · ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl CgOptions {
    /// Default tolerance 1e-10 and at most `10·√n` iterations.
    pub fn for_size(n: usize) -> Self {
        CgOptions { tol: 1e-10, max_iter: ((10.0 * (n as f64).sqrt()).ceil() as usize).max(10) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator.
/// `x` holds the initial guess on entry and the solution on exit.
pub fn cg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgStats> {
    let n = b.len();
    let bnorm = norm2_slice(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let inv: alloc::vec::Vec<f64> =
        diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2_slice(&r) / bnorm;
    if res <= opts.tol {
        return Ok(CgStats { iterations: 0, residual: res });
    }
    let mut z: alloc::vec::Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm2_slice(&r) / bnorm;
        if !res.is_finite() {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        if res <= opts.tol {
            return Ok(CgStats { iterations: it, residual: res });
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { iterations: opts.max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn solves_spd_system_and_warm_start_is_free() {
        let n = 30;
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0 + i as f64 * 0.1
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let b: alloc::vec::Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        let diag: alloc::vec::Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let s = cg(|v, out| a.matvec(v, out), &diag, &b, &mut x, CgOptions::for_size(n)).unwrap();
        assert!(s.residual <= 1e-10);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
        let again = cg(|v, out| a.matvec(v, out), &diag, &b, &mut x, CgOptions::for_size(n)).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let b = [1.0, 1.0];
        let mut x = [0.0; 2];
        let err = cg(|v, out| {
            out[0] = v[0];
            out[1] = -v[1];
        }, &[1.0, 1.0], &b, &mut x, CgOptions::for_size(2));
        assert!(matches!(err, Err(Error::Solver { .. })));
    }
}
