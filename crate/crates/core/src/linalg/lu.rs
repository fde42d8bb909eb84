use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::dense::{gemm_raw, DenseMatrix};
use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// LU factorization with partial pivoting, `P A = L U`, stored in place.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    /// `perm[i]` is the original row now at position `i`.
    perm: Vec<usize>,
}

impl Lu {
    /// Blocked right-looking factorization. Fails on an exactly zero pivot or
    /// one below `n · ε · max|A|`.
    pub fn factor(mut a: DenseMatrix, context: &str) -> Result<Lu> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "LU needs a square matrix");
        let amax = a.norm_max();
        let tiny = amax * f64::EPSILON * (n.max(1) as f64) * 1e-3;
        let mut perm: Vec<usize> = (0..n).collect();
        if n == 0 {
            return Ok(Lu { lu: a, perm });
        }
        if amax == 0.0 || !amax.is_finite() {
            return Err(fail(context, String::from("matrix is zero or not finite")));
        }
        for kb in (0..n).step_by(BLOCK) {
            let ke = (kb + BLOCK).min(n);
            // Panel.
            for j in kb..ke {
                let mut p = j;
                let mut best = a[(j, j)].abs();
                for i in j + 1..n {
                    let v = a[(i, j)].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if best <= tiny {
                    return Err(fail(context, format!("pivot {best:.3e} at column {j}")));
                }
                a.swap_rows(j, p);
                perm.swap(j, p);
                let piv = a[(j, j)];
                let (top, rest) = a.as_mut_slice().split_at_mut((j + 1) * n);
                let urow = &top[j * n + j + 1..j * n + ke];
                for i in 0..n - j - 1 {
                    let row = &mut rest[i * n..(i + 1) * n];
                    let l = row[j] / piv;
                    row[j] = l;
                    if l != 0.0 {
                        for (r, u) in row[j + 1..ke].iter_mut().zip(urow) {
                            *r -= l * u;
                        }
                    }
                }
            }
            if ke == n {
                break;
            }
            // U12 = L11⁻¹ A12.
            for i in kb..ke {
                for k in kb..i {
                    let l = a[(i, k)];
                    if l != 0.0 {
                        let data = a.as_mut_slice();
                        let (lo, hi) = data.split_at_mut(i * n);
                        let src = &lo[k * n + ke..k * n + n];
                        for (d, s) in hi[ke..n].iter_mut().zip(src) {
                            *d -= l * s;
                        }
                    }
                }
            }
            // A22 -= L21 U12.
            let m = n - ke;
            let kk = ke - kb;
            let p = a.as_mut_slice().as_mut_ptr();
            // SAFETY: L21 (rows ke.., cols kb..ke), U12 (rows kb..ke, cols ke..) and
            // A22 (rows ke.., cols ke..) are disjoint regions of the same buffer.
            unsafe {
                gemm_raw(
                    m, kk, m, -1.0,
                    p.add(ke * n + kb), n as isize, 1,
                    p.add(kb * n + ke), n as isize, 1,
                    1.0,
                    p.add(ke * n + ke), n as isize, 1,
                );
            }
        }
        Ok(Lu { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let tmp: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&tmp);
        for i in 0..n {
            let row = self.lu.row(i);
            let s = crate::math::dot(&row[..i], &b[..i]);
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = crate::math::dot(&row[i + 1..], &b[i + 1..]);
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `A X = B` in place for a row-major `B` with `dim()` rows.
    pub fn solve_matrix(&self, b: &mut DenseMatrix) {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let r = b.cols();
        if r == 0 || n == 0 {
            return;
        }
        let mut permuted = DenseMatrix::zeros(n, r);
        for (i, &p) in self.perm.iter().enumerate() {
            permuted.row_mut(i).copy_from_slice(b.row(p));
        }
        *b = permuted;
        let lu = self.lu.as_slice().as_ptr();
        // Forward: L Y = B.
        for kb in (0..n).step_by(BLOCK) {
            let ke = (kb + BLOCK).min(n);
            if kb > 0 {
                let bp = b.as_mut_slice().as_mut_ptr();
                // SAFETY: rows 0..kb and kb..ke of B do not overlap.
                unsafe {
                    gemm_raw(
                        ke - kb, kb, r, -1.0,
                        lu.add(kb * n), n as isize, 1,
                        bp, r as isize, 1,
                        1.0,
                        bp.add(kb * r), r as isize, 1,
                    );
                }
            }
            for i in kb..ke {
                for k in kb..i {
                    let l = self.lu[(i, k)];
                    if l != 0.0 {
                        let data = b.as_mut_slice();
                        let (lo, hi) = data.split_at_mut(i * r);
                        crate::math::axpy(-l, &lo[k * r..(k + 1) * r], &mut hi[..r]);
                    }
                }
            }
        }
        // Backward: U X = Y.
        let nblocks = n.div_ceil(BLOCK);
        for bi in (0..nblocks).rev() {
            let kb = bi * BLOCK;
            let ke = (kb + BLOCK).min(n);
            if ke < n {
                let bp = b.as_mut_slice().as_mut_ptr();
                // SAFETY: rows kb..ke and ke..n of B do not overlap.
                unsafe {
                    gemm_raw(
                        ke - kb, n - ke, r, -1.0,
                        lu.add(kb * n + ke), n as isize, 1,
                        bp.add(ke * r), r as isize, 1,
                        1.0,
                        bp.add(kb * r), r as isize, 1,
                    );
                }
            }
            for i in (kb..ke).rev() {
                for k in i + 1..ke {
                    let u = self.lu[(i, k)];
                    if u != 0.0 {
                        let data = b.as_mut_slice();
                        let (lo, hi) = data.split_at_mut(k * r);
                        crate::math::axpy(-u, &hi[..r], &mut lo[i * r..(i + 1) * r]);
                    }
                }
                let d = 1.0 / self.lu[(i, i)];
                b.row_mut(i).iter_mut().for_each(|v| *v *= d);
            }
        }
    }

    /// `A⁻¹` as a dense matrix.
    pub fn inverse(&self) -> DenseMatrix {
        let mut x = DenseMatrix::identity(self.dim());
        self.solve_matrix(&mut x);
        x
    }
}

fn fail(context: &str, reason: String) -> Error {
    Error::Conditioning { context: String::from(context), reason }
}
