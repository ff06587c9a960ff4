use alloc::vec;
use alloc::vec::Vec;

use super::{FemError, Grid2D};
use crate::linalg::{cholesky, dot, SymDense};
use crate::sparse::SymSparse;

// Dense copy of the block of `k` coupling ring `a` (rows) to ring `b` (cols).
fn ring_block(k: &SymSparse, grid: &Grid2D, a: usize, b: usize) -> Vec<f64> {
    let n = grid.n_theta();
    let mut out = vec![0.0; n * n];
    let (lo, hi) = (b * n, (b + 1) * n);
    for r in 0..n {
        let (cols, vals) = k.row(a * n + r);
        for (c, v) in cols.iter().zip(vals) {
            if (lo..hi).contains(c) {
                out[r * n + (c - lo)] = *v;
            }
        }
    }
    out
}

/// Dirichlet-to-Neumann matrix `K_GG - K_GI K_II^{-1} K_IG` on the rim,
/// eliminating one ring at a time from the pole outwards:
/// `S_0 = A_00`, `S_i = A_ii - B_i^T S_{i-1}^{-1} B_i` with `B_i` the
/// coupling of ring `i-1` to ring `i`. The result is symmetric bit for bit.
pub fn dtn_matrix(k: &SymSparse, grid: &Grid2D) -> Result<SymDense, FemError> {
    let n = grid.n_theta();
    let rings = grid.n_t() + 1;
    if k.dim() != rings * n {
        return Err(FemError::InvalidInput("stiffness matrix does not match the grid"));
    }
    let mut s = ring_block(k, grid, 0, 0);
    let mut xt = vec![0.0; n * n];
    let mut start = vec![0usize; n];
    for i in 1..rings {
        cholesky(&mut s, n).map_err(|_| FemError::SingularInterior { ring: i - 1 })?;
        let b = ring_block(k, grid, i - 1, i);
        // Row c of xt holds column c of X = L^{-1} B, zero above start[c].
        for c in 0..n {
            let first = (0..n).find(|&r| b[r * n + c] != 0.0).unwrap_or(n);
            start[c] = first;
            let col = &mut xt[c * n..(c + 1) * n];
            for r in 0..n {
                col[r] = if r < first { 0.0 } else { b[r * n + c] };
            }
            for r in first..n {
                let acc = dot(&s[r * n + first..r * n + r], &col[first..r]);
                col[r] = (col[r] - acc) / s[r * n + r];
            }
        }
        let a = ring_block(k, grid, i, i);
        for p in 0..n {
            for q in p..n {
                let st = start[p].max(start[q]);
                let v = a[p * n + q] - dot(&xt[p * n + st..(p + 1) * n], &xt[q * n + st..(q + 1) * n]);
                s[p * n + q] = v;
                s[q * n + p] = v;
            }
        }
    }
    Ok(SymDense { n, data: s })
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::fem::assemble_stiffness;
    use crate::geom::MetricField;

    #[test]
    fn constants_are_in_the_kernel_and_matrix_is_symmetric() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 12, 16).unwrap();
        let k = assemble_stiffness(&m, &g).unwrap();
        let d = dtn_matrix(&k, &g).unwrap();
        assert_eq!(d.asymmetry(), 0.0);
        let y = d.matvec(&std::vec![1.0; 16]);
        assert!(y.iter().all(|v| v.abs() < 1e-11), "{y:?}");
    }

    #[test]
    fn trace_of_x_is_an_eigenvector() {
        let m = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&m, 48, 48).unwrap();
        let k = assemble_stiffness(&m, &g).unwrap();
        let d = dtn_matrix(&k, &g).unwrap();
        let x: Vec<f64> = (0..48).map(|j| g.theta(j).cos()).collect();
        // Compare against the lumped rim mass (arc length h per node).
        let y = d.matvec(&x);
        for j in 0..48 {
            assert!((y[j] / g.h_theta() - x[j]).abs() < 5e-3, "{j}: {}", y[j] / g.h_theta());
        }
    }
}
