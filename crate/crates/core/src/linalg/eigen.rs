//! Eigenvalues of dense nonsymmetric matrices: balancing, Householder
//! reduction to Hessenberg form and the Francis double-shift QR iteration.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

const MAX_ITS: usize = 60;

/// Balanced Hessenberg form `H = Qᵀ D⁻¹ A D Q` with the transformations kept
/// so eigenvectors of `H` can be mapped back to `A`.
#[derive(Clone, Debug)]
pub struct Hessenberg {
    h: DenseMatrix,
    scale: Vec<f64>,
    /// Reflectors `I − u uᵀ / beta` acting on indices `start..n`.
    reflectors: Vec<(usize, Vec<f64>, f64)>,
}

impl Hessenberg {
    pub fn new(a: &DenseMatrix) -> Self {
        let mut h = a.clone();
        let scale = balance(&mut h);
        let reflectors = reduce(&mut h);
        Hessenberg { h, scale, reflectors }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.h
    }

    /// All eigenvalues, conjugate pairs adjacent with negative imaginary part first.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let mut work = self.h.clone();
        hqr(&mut work)
    }

    /// Eigenvector of the original matrix for the eigenvalue `lambda`, by inverse
    /// iteration on the Hessenberg form. Normalized to unit 2-norm.
    pub fn eigenvector(&self, lambda: Complex64) -> Vec<Complex64> {
        let n = self.h.rows();
        let hnorm = self.h.norm_fro().max(f64::MIN_POSITIVE);
        let sigma = lambda + Complex64::new(1e-10 * hnorm, 1e-10 * hnorm);
        let lu = HessLu::factor(&self.h, sigma, hnorm * f64::EPSILON);
        let mut v: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.01, 0.0)).collect();
        for _ in 0..3 {
            let nv = cnorm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            lu.solve(&mut v);
        }
        // Back to the balanced matrix, then to the original one.
        for (start, u, beta) in self.reflectors.iter().rev() {
            let mut f = Complex64::new(0.0, 0.0);
            for (k, uk) in u.iter().enumerate() {
                f += v[start + k] * uk;
            }
            f /= *beta;
            for (k, uk) in u.iter().enumerate() {
                v[start + k] -= f * uk;
            }
        }
        for (x, s) in v.iter_mut().zip(&self.scale) {
            *x *= *s;
        }
        let nv = cnorm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    }
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    Hessenberg::new(a).eigenvalues()
}

/// `‖A v − λ v‖₂` for a complex vector.
pub fn residual(a: &DenseMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        let row = a.row(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for (aij, vj) in row.iter().zip(v) {
            acc += vj * aij;
        }
        acc -= lambda * v[i];
        s += acc.norm_sqr();
    }
    s.sqrt()
}

fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Diagonal similarity scaling by powers of two. Returns the scale factors.
fn balance(a: &mut DenseMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut scale = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    scale[i] *= f;
                    a.row_mut(i).iter_mut().for_each(|v| *v *= g);
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
    scale
}

/// Householder reduction to upper Hessenberg form, zeroing below the subdiagonal.
fn reduce(a: &mut DenseMatrix) -> Vec<(usize, Vec<f64>, f64)> {
    let n = a.rows();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut f = vec![0.0; n];
    for m in 1..n - 1 {
        let scale: f64 = (m..n).map(|i| a[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut u: Vec<f64> = (m..n).map(|i| a[(i, m - 1)] / scale).collect();
        let h: f64 = u.iter().map(|x| x * x).sum();
        let mut g = h.sqrt();
        if u[0] > 0.0 {
            g = -g;
        }
        let beta = h - u[0] * g;
        u[0] -= g;
        // Left: rows m.., columns m-1...
        let fs = &mut f[..n];
        fs.iter_mut().for_each(|v| *v = 0.0);
        for (k, uk) in u.iter().enumerate() {
            let row = a.row(m + k);
            for j in m - 1..n {
                fs[j] += uk * row[j];
            }
        }
        for (k, uk) in u.iter().enumerate() {
            let row = a.row_mut(m + k);
            let c = uk / beta;
            for j in m - 1..n {
                row[j] -= c * fs[j];
            }
        }
        // Right: all rows, columns m...
        for i in 0..n {
            let row = a.row_mut(i);
            let s = crate::math::dot(&row[m..], &u) / beta;
            for (x, uk) in row[m..].iter_mut().zip(&u) {
                *x -= s * uk;
            }
        }
        a[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            a[(i, m - 1)] = 0.0;
        }
        out.push((m, u, beta));
    }
    out
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed on return).
fn hqr(a: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let n = a.rows() as isize;
    let mut wr = vec![0.0; n as usize];
    let mut wi = vec![0.0; n as usize];
    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[(($i) as usize, ($j) as usize)]
        };
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += at!(i, j).abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    while nn >= 0 {
        let mut its = 0usize;
        let mut l;
        loop {
            l = nn;
            while l > 0 {
                s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at!(l, l - 1).abs() <= eps * s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = at!(nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                y = at!(nn - 1, nn - 1);
                w = at!(nn, nn - 1) * at!(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    let (i1, i2) = ((nn - 1) as usize, nn as usize);
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[i1] = x + z;
                        wr[i2] = x + z;
                        if z != 0.0 {
                            wr[i2] = x - w / z;
                        }
                        wi[i1] = 0.0;
                        wi[i2] = 0.0;
                    } else {
                        wr[i1] = x + p;
                        wr[i2] = x + p;
                        wi[i1] = -z;
                        wi[i2] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS {
                        return Err(Error::Eigen { index: nn as usize });
                    }
                    if its > 0 && its % 10 == 0 {
                        t += x;
                        for i in 0..=nn {
                            at!(i, i) -= x;
                        }
                        s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = at!(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / at!(m + 1, m) + at!(m, m + 1);
                        q = at!(m + 1, m + 1) - z - r - s;
                        r = at!(m + 2, m + 1);
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        at!(i + 2, i) = 0.0;
                        if i != m {
                            at!(i + 2, i - 1) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at!(k, k - 1);
                            q = at!(k + 1, k - 1);
                            r = 0.0;
                            if k + 1 != nn {
                                r = at!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    at!(k, k - 1) = -at!(k, k - 1);
                                }
                            } else {
                                at!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            let cols = a.cols();
                            {
                                let data = a.as_mut_slice();
                                let (ku, k1u, k2u) = (k as usize, (k + 1) as usize, (k + 2) as usize);
                                for j in ku..=nn as usize {
                                    let mut pp = data[ku * cols + j] + q * data[k1u * cols + j];
                                    if k + 1 != nn {
                                        pp += r * data[k2u * cols + j];
                                        data[k2u * cols + j] -= pp * z;
                                    }
                                    data[k1u * cols + j] -= pp * y;
                                    data[ku * cols + j] -= pp * x;
                                }
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * at!(i, k) + y * at!(i, k + 1);
                                if k + 1 != nn {
                                    pp += z * at!(i, k + 2);
                                    at!(i, k + 2) -= pp * r;
                                }
                                at!(i, k + 1) -= pp * q;
                                at!(i, k) -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// LU of `H − σI` for Hessenberg `H` with adjacent-row pivoting.
struct HessLu {
    n: usize,
    /// Upper-triangular rows, row `k` stores columns `k..n`.
    u: Vec<Vec<Complex64>>,
    mult: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl HessLu {
    fn factor(h: &DenseMatrix, sigma: Complex64, tiny: f64) -> Self {
        let n = h.rows();
        let mut u = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n);
        let mut swapped = Vec::with_capacity(n);
        let shifted = |i: usize| -> Vec<Complex64> {
            let start = i.saturating_sub(1);
            (start..n)
                .map(|j| {
                    let v = Complex64::new(h[(i, j)], 0.0);
                    if i == j {
                        v - sigma
                    } else {
                        v
                    }
                })
                .collect()
        };
        // `carry` holds columns k..n of the current pivot-candidate row.
        let mut carry: Vec<Complex64> = shifted(0);
        for k in 0..n {
            if k + 1 == n {
                if carry[0].norm() < tiny {
                    carry[0] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
                }
                u.push(carry.clone());
                break;
            }
            // Row k+1 starts at column k.
            let next = shifted(k + 1);
            let (mut top, mut bot) = (carry, next);
            let swap = bot[0].norm() > top[0].norm();
            if swap {
                core::mem::swap(&mut top, &mut bot);
            }
            if top[0].norm() < tiny {
                top[0] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
            }
            let l = bot[0] / top[0];
            let mut rest = Vec::with_capacity(n - k - 1);
            for j in 1..top.len() {
                rest.push(bot[j] - l * top[j]);
            }
            u.push(top);
            mult.push(l);
            swapped.push(swap);
            carry = rest;
        }
        HessLu { n, u, mult, swapped }
    }

    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= self.mult[k] * t;
        }
        for k in (0..n).rev() {
            let row = &self.u[k];
            let mut s = b[k];
            for j in k + 1..n {
                s -= row[j - k] * b[j];
            }
            b[k] = s / row[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn triangular_matrix_eigenvalues_are_its_diagonal() {
        let a = DenseMatrix::from_fn(6, 6, |i, j| if j >= i { (i + 1) as f64 + 0.1 * j as f64 } else { 0.0 });
        let ev = sorted(eigenvalues(&a).unwrap());
        for (k, e) in ev.iter().enumerate() {
            let want = (k + 1) as f64 + 0.1 * k as f64;
            assert!((e.re - want).abs() < 1e-12 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        // [[0, -2], [2, 0]] has ±2i; embed with a real eigenvalue 3.
        let a = DenseMatrix::from_vec(3, 3, vec![0.0, -2.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 3.0]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -2.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!((ev[2] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenpairs_of_a_random_matrix_have_small_residuals() {
        let n = 80;
        let mut state = 12345u64;
        let a = DenseMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        let hess = Hessenberg::new(&a);
        let ev = hess.eigenvalues().unwrap();
        assert_eq!(ev.len(), n);
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: Complex64 = ev.iter().sum();
        assert!((sum.re - trace).abs() < 1e-10 && sum.im.abs() < 1e-10);
        for &lam in ev.iter().step_by(9) {
            let v = hess.eigenvector(lam);
            assert!(residual(&a, lam, &v) < 1e-9 * a.norm_fro());
        }
    }
}
