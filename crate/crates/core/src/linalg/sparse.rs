use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseMatrix;

/// Compressed sparse row matrix with sorted column indices in each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Row-by-row builder. Entries of a row may arrive in any order; duplicates are summed.
#[derive(Debug)]
pub struct CsrBuilder {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(cols: usize) -> Self {
        CsrBuilder { cols, indptr: vec![0], indices: Vec::new(), values: Vec::new(), scratch: Vec::new() }
    }

    pub fn with_capacity(cols: usize, rows: usize, nnz: usize) -> Self {
        let mut b = Self::new(cols);
        b.indptr.reserve(rows);
        b.indices.reserve(nnz);
        b.values.reserve(nnz);
        b
    }

    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        self.scratch.clear();
        self.scratch.extend(entries);
        self.scratch.sort_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(j, v) in &self.scratch {
            assert!(j < self.cols, "column {j} out of range");
            if j == last {
                *self.values.last_mut().unwrap() += v;
            } else {
                self.indices.push(j);
                self.values.push(v);
                last = j;
            }
        }
        self.indptr.push(self.indices.len());
    }

    pub fn finish(self) -> CsrMatrix {
        CsrMatrix {
            rows: self.indptr.len() - 1,
            cols: self.cols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = CsrBuilder::new(n);
        for i in 0..n {
            b.push_row([(i, 1.0)]);
        }
        b.finish()
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut b = CsrBuilder::new(m.cols());
        for i in 0..m.rows() {
            b.push_row(m.row(i).iter().copied().enumerate().filter(|e| e.1 != 0.0));
        }
        b.finish()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    /// `y = Aᵀ x`
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k] * xi;
            }
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                let dst = next[j];
                indices[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        CsrMatrix { rows: self.cols, cols: self.rows, indptr, indices, values }
    }

    /// Sparse product `A B` (row-wise accumulation).
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let n = other.cols;
        let mut acc = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for k in self.indptr[i]..self.indptr[i + 1] {
                let a = self.values[k];
                let r = self.indices[k];
                for kk in other.indptr[r]..other.indptr[r + 1] {
                    let j = other.indices[kk];
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * other.values[kk];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                indices.push(j);
                values.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { rows: self.rows, cols: n, indptr, indices, values }
    }

    /// Entry-wise `alpha A + beta B` for equally shaped matrices.
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut b = CsrBuilder::with_capacity(self.cols, self.rows, self.nnz() + other.nnz());
        for i in 0..self.rows {
            b.push_row(
                self.row(i).map(|(j, v)| (j, alpha * v)).chain(other.row(i).map(|(j, v)| (j, beta * v))),
            );
        }
        b.finish()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Keeps only the listed rows (in order).
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut b = CsrBuilder::new(self.cols);
        for &i in rows {
            b.push_row(self.row(i));
        }
        b.finish()
    }
}
