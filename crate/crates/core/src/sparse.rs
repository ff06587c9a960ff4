//! Symmetric sparse matrices in compressed-row form.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

/// Compressed-row matrix with a structurally symmetric pattern. Both
/// triangles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymSparse {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymSparse {
    /// Empty matrix with the given per-row column lists (each must contain
    /// its diagonal, and the pattern must be symmetric).
    pub fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Self { n, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].binary_search(&j).ok().map(|k| a + k)
    }

    /// Adds `v` at `(i, j)`; panics when the entry is outside the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside sparsity pattern");
        self.vals[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.vals[k])
    }

    /// Row `i` as `(columns, values)`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        crate::linalg::dot(x, &y)
    }

    pub fn scale(&mut self, a: f64) {
        for v in self.vals.iter_mut() {
            *v *= a;
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(*c, i)).abs());
            }
        }
        worst
    }

    /// Dense copy (row-major).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[i * self.n + c] = *v;
            }
        }
        d
    }

    /// Text dump, one `row col value` triplet per stored entry, zero-based,
    /// values with 17 significant digits.
    pub fn to_triplets(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{i} {c} {v:.16e}");
            }
        }
        s
    }
}
