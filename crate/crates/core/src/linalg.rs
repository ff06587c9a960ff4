//! Dense symmetric linear algebra on row-major `n x n` buffers.

use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("eigen iteration did not converge")]
    NoConvergence,
}

/// In-place Cholesky factorization; on success the lower triangle holds `L`
/// with `A = L L^T` and the strict upper triangle is zeroed.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<(), LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::Dimension("cholesky input is not n x n"));
    }
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (i * n, j * n);
            let mut s = a[ri + j];
            s -= dot(&a[ri..ri + j], &a[rj..rj + j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i, value: s });
                }
                a[ri + i] = s.sqrt();
            } else {
                a[ri + j] = s / a[rj + j];
            }
        }
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += x[k] * y[k];
        acc[1] += x[k + 1] * y[k + 1];
        acc[2] += x[k + 2] * y[k + 2];
        acc[3] += x[k + 3] * y[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += x[k] * y[k];
    }
    s
}

/// Solves `L x = b` in place.
pub fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s = b[i] - dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
pub fn backward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let xi = b[i] / l[i * n + i];
        b[i] = xi;
        // Column i of L^T is row i of L: subtract from earlier unknowns.
        for k in 0..i {
            b[k] -= l[i * n + k] * xi;
        }
    }
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
/// `vectors[k]` is the unit eigenvector of `values[k]`.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::Dimension("eigen input is not n x n"));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, n, &mut d, &mut e);
    tql2(&mut v, n, &mut d, &mut e)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|r| v[r * n + k]).collect()).collect();
    Ok((values, vectors))
}

// Householder reduction to tridiagonal form (accumulating the transform),
// after the EISPACK routine of the same name.
fn tred2(v: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on the tridiagonal form.
fn tql2(v: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LinalgError::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        h = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * h;
                        v[row + i] = c * v[row + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Generalized symmetric-definite problem `A x = lambda B x`.
/// Eigenvectors are `B`-orthonormal.
pub fn generalized_eigen(a: &[f64], b: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinalgError> {
    if a.len() != n * n || b.len() != n * n {
        return Err(LinalgError::Dimension("generalized eigen inputs are not n x n"));
    }
    let mut l = b.to_vec();
    cholesky(&mut l, n)?;
    // Y = L^{-1} A, computed column by column as rows of Y^T (A symmetric).
    let mut yt = a.to_vec();
    for j in 0..n {
        forward_solve(&l, n, &mut yt[j * n..(j + 1) * n]);
    }
    // C = L^{-1} Y^T ... rows of C^T = L^{-1} applied to rows of Y.
    // Y = (Y^T)^T, so row j of Y is column j of Y^T.
    let mut c = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = yt[i * n + j];
        }
        forward_solve(&l, n, &mut col);
        c[j * n..(j + 1) * n].copy_from_slice(&col);
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = s;
            c[j * n + i] = s;
        }
    }
    let (values, mut vectors) = sym_eigen(&c, n)?;
    for v in vectors.iter_mut() {
        backward_solve(&l, n, v);
    }
    Ok((values, vectors))
}

/// Dense symmetric matrix, both triangles stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymDense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymDense {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.data, self.n, x)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }
}

/// `y = A x` for a dense row-major matrix.
pub fn matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use proptest::prelude::*;

    fn random_spd(n: usize, seed: u64) -> Vec<f64> {
        let mut x = seed;
        let mut r = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g: Vec<f64> = (0..n * n).map(|_| r()).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += 0.5;
        }
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let n = 7;
        let a = random_spd(n, 3);
        let mut l = a.clone();
        cholesky(&mut l, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                assert!((s - a[i * n + j]).abs() < 1e-12);
            }
        }
        let mut b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let orig = b.clone();
        forward_solve(&l, n, &mut b);
        backward_solve(&l, n, &mut b);
        let ab = matvec(&a, n, &b);
        for i in 0..n {
            assert!((ab[i] - orig[i]).abs() < 1e-10);
        }
        let mut neg = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(cholesky(&mut neg, 2), Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn path_graph_laplacian_spectrum() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let (vals, vecs) = sym_eigen(&a, n).unwrap();
        for k in 0..n {
            let exact = 2.0 - 2.0 * (core::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((vals[k] - exact).abs() < 1e-13);
            let av = matvec(&a, n, &vecs[k]);
            for i in 0..n {
                assert!((av[i] - vals[k] * vecs[k][i]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn generalized_pairs_satisfy_the_pencil(seed in 0u64..1000, n in 1usize..20) {
            let a = {
                let mut a = random_spd(n, seed);
                for i in 0..n { a[i * n + i] -= 1.0; }
                a
            };
            let b = random_spd(n, seed + 7);
            let (vals, vecs) = generalized_eigen(&a, &b, n).unwrap();
            for w in vals.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for k in 0..n {
                let ax = matvec(&a, n, &vecs[k]);
                let bx = matvec(&b, n, &vecs[k]);
                let norm = dot(&vecs[k], &bx);
                prop_assert!((norm - 1.0).abs() < 1e-9);
                for i in 0..n {
                    prop_assert!((ax[i] - vals[k] * bx[i]).abs() < 1e-9 * (1.0 + vals[k].abs()));
                }
            }
        }
    }
}
