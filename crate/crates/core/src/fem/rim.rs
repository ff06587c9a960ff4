use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use super::{dense_pencil, EigResult, FemError, Grid2D, Problem};
use crate::geom::{boundary_geometry, BoundaryData, MetricField, GAUSS3};
use crate::linalg::{self, dot};
use crate::sparse::SymSparse;

fn periodic_pattern(n: usize) -> SymSparse {
    SymSparse::with_pattern((0..n).map(|j| vec![(j + n - 1) % n, j, (j + 1) % n]).collect())
}

/// Rim mass form `int u v e^{-phi} ds` with piecewise linear elements.
pub fn boundary_mass(bd: &BoundaryData) -> SymSparse {
    let n = bd.n_theta();
    let h = bd.h();
    let mut m = periodic_pattern(n);
    let (gp, gw) = GAUSS3;
    for j in 0..n {
        let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
        for q in 0..3 {
            let w = h * gw[q] * bd.edge_density[j][q] * bd.edge_weight[j][q];
            let (na, nb) = (1.0 - gp[q], gp[q]);
            aa += w * na * na;
            ab += w * na * nb;
            bb += w * nb * nb;
        }
        let k = (j + 1) % n;
        m.add(j, j, aa);
        m.add(k, k, bb);
        m.add(j, k, ab);
        m.add(k, j, ab);
    }
    m
}

/// Rim stiffness form `int (du/ds)(dv/ds) e^{-phi} ds`.
pub fn boundary_stiffness(bd: &BoundaryData) -> SymSparse {
    let n = bd.n_theta();
    let h = bd.h();
    let mut m = periodic_pattern(n);
    let gw = GAUSS3.1;
    for j in 0..n {
        let mut c = 0.0;
        for q in 0..3 {
            c += gw[q] * bd.edge_weight[j][q] / bd.edge_density[j][q];
        }
        c /= h;
        let k = (j + 1) % n;
        m.add(j, j, c);
        m.add(k, k, c);
        m.add(j, k, -c);
        m.add(k, j, -c);
    }
    m
}

pub fn assemble_boundary_mass(m: &MetricField, grid: &Grid2D) -> Result<SymSparse, FemError> {
    Ok(boundary_mass(&boundary_geometry(m, grid.n_theta())?))
}

pub fn assemble_boundary_stiffness(m: &MetricField, grid: &Grid2D) -> Result<SymSparse, FemError> {
    Ok(boundary_stiffness(&boundary_geometry(m, grid.n_theta())?))
}

/// `L D L^T` factorization of a symmetric positive definite periodic
/// tridiagonal matrix. `L` is unit bidiagonal plus a filled last row.
#[derive(Clone, Debug)]
pub struct CyclicTridiagonal {
    d: Vec<f64>,
    sub: Vec<f64>,
    last: Vec<f64>,
}

impl CyclicTridiagonal {
    /// `diag[j]` and `off[j]`, the entry coupling `j` and `j+1 mod n`.
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self, FemError> {
        let n = diag.len();
        if n < 3 || off.len() != n {
            return Err(FemError::InvalidInput("periodic system needs at least three unknowns"));
        }
        let mut d = vec![0.0; n];
        let mut sub = vec![0.0; n];
        let mut last = vec![0.0; n];
        for j in 0..n - 1 {
            d[j] = diag[j] - if j > 0 { sub[j - 1] * sub[j - 1] * d[j - 1] } else { 0.0 };
            if !(d[j] > 0.0) {
                return Err(FemError::InvalidInput("periodic system is not positive definite"));
            }
            // Row n-1 couples to column j through off[n-1] (j = 0) and off[n-2].
            let a_last = if j == 0 {
                off[n - 1]
            } else if j == n - 2 {
                off[n - 2]
            } else {
                0.0
            };
            let prev = if j > 0 { last[j - 1] * sub[j - 1] * d[j - 1] } else { 0.0 };
            last[j] = (a_last - prev) / d[j];
            if j + 2 < n {
                sub[j] = off[j] / d[j];
            }
        }
        let mut dn = diag[n - 1];
        for j in 0..n - 1 {
            dn -= last[j] * last[j] * d[j];
        }
        if !(dn > 0.0) {
            return Err(FemError::InvalidInput("periodic system is not positive definite"));
        }
        d[n - 1] = dn;
        Ok(Self { d, sub, last })
    }

    pub fn from_sparse(m: &SymSparse) -> Result<Self, FemError> {
        let n = m.dim();
        let diag: Vec<f64> = (0..n).map(|j| m.get(j, j)).collect();
        let off: Vec<f64> = (0..n).map(|j| m.get(j, (j + 1) % n)).collect();
        Self::factor(&diag, &off)
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for j in 1..n - 1 {
            b[j] -= self.sub[j - 1] * b[j - 1];
        }
        let mut tail = b[n - 1];
        for j in 0..n - 1 {
            tail -= self.last[j] * b[j];
        }
        b[n - 1] = tail;
        for j in 0..n {
            b[j] /= self.d[j];
        }
        b[n - 2] -= self.last[n - 2] * b[n - 1];
        for j in (0..n - 2).rev() {
            b[j] -= self.sub[j] * b[j + 1] + self.last[j] * b[n - 1];
        }
    }
}

/// Closed eigenvalues of the rim Laplacian, `K u = lambda M u` with the
/// forms of [`boundary_stiffness`] and [`boundary_mass`].
///
/// Small rims are solved densely. Larger ones use shift-and-invert subspace
/// iteration with Rayleigh-Ritz, which only needs periodic tridiagonal
/// solves.
pub fn closed_circle_spectrum(bd: &BoundaryData, count: usize) -> Result<EigResult, FemError> {
    if count == 0 {
        return Err(FemError::InvalidInput("count must be positive"));
    }
    if bd.density.iter().any(|d| !(*d > 0.0)) {
        return Err(FemError::InvalidInput("rim density must be positive"));
    }
    let n = bd.n_theta();
    let mass = boundary_mass(bd);
    let stiff = boundary_stiffness(bd);
    let meta = (0, n, 0.0);
    let p = (count + 8).min(n);
    if n <= 128 || 2 * p >= n {
        return dense_pencil(Problem::ClosedBoundary, &stiff.to_dense(), &mass.to_dense(), n, count, meta);
    }
    subspace_iteration(&stiff, &mass, count, p, meta)
}

fn subspace_iteration(
    k: &SymSparse,
    m: &SymSparse,
    count: usize,
    p: usize,
    meta: (usize, usize, f64),
) -> Result<EigResult, FemError> {
    let n = k.dim();
    let tr_k: f64 = (0..n).map(|j| k.get(j, j)).sum();
    let tr_m: f64 = (0..n).map(|j| m.get(j, j)).sum();
    // Shift of the order of the lowest nonzero eigenvalue.
    let sigma = tr_k / tr_m / (n as f64 * n as f64);
    let diag: Vec<f64> = (0..n).map(|j| k.get(j, j) + sigma * m.get(j, j)).collect();
    let off: Vec<f64> = (0..n).map(|j| k.get(j, (j + 1) % n) + sigma * m.get(j, (j + 1) % n)).collect();
    let solver = CyclicTridiagonal::factor(&diag, &off)?;
    let k_norm = (0..n).map(|i| k.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let theta0 = 2.0 * core::f64::consts::PI / n as f64;
    // Low Fourier modes as the starting block.
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|c| {
            let l = c.div_ceil(2) as f64;
            (0..n)
                .map(|j| {
                    let a = l * theta0 * j as f64 + 0.1 * c as f64;
                    if c % 2 == 0 { a.cos() } else { a.sin() }
                })
                .collect()
        })
        .collect();
    let max_iter = 500;
    let mut last_res = f64::INFINITY;
    for _ in 0..max_iter {
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let mut b = m.matvec(v);
                solver.solve(&mut b);
                b
            })
            .collect();
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.matvec(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| m.matvec(v)).collect();
        let mut kr = vec![0.0; p * p];
        let mut mr = vec![0.0; p * p];
        for a in 0..p {
            for b in a..p {
                let kv = dot(&y[a], &ky[b]);
                let mv = dot(&y[a], &my[b]);
                kr[a * p + b] = kv;
                kr[b * p + a] = kv;
                mr[a * p + b] = mv;
                mr[b * p + a] = mv;
            }
        }
        let (vals, vecs) = linalg::generalized_eigen(&kr, &mr, p)?;
        x = vecs
            .iter()
            .map(|c| {
                let mut v = vec![0.0; n];
                for (a, ca) in c.iter().enumerate() {
                    for (vi, yi) in v.iter_mut().zip(&y[a]) {
                        *vi += ca * yi;
                    }
                }
                v
            })
            .collect();
        let mut worst: f64 = 0.0;
        let mut residuals = Vec::with_capacity(count);
        for c in 0..count {
            let kx = k.matvec(&x[c]);
            let mx = m.matvec(&x[c]);
            let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - vals[c] * b) * (a - vals[c] * b)).sum();
            let nx = dot(&x[c], &x[c]);
            let rel = (r / nx).sqrt();
            residuals.push(rel);
            worst = worst.max(rel);
        }
        last_res = worst;
        if worst <= 1e-12 * k_norm {
            x.truncate(count);
            return Ok(EigResult {
                problem: Problem::ClosedBoundary,
                values: vals[..count].to_vec(),
                vectors: x,
                residuals,
                n_t: meta.0,
                n_theta: meta.1,
                t0: meta.2,
            });
        }
    }
    Err(FemError::NoConvergence { iterations: max_iter, residual: last_res })
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::expr::Expr;
    use core::f64::consts::PI;

    #[test]
    fn rim_forms_on_circles() {
        let bd = boundary_geometry(&MetricField::disc(1.0), 64).unwrap();
        let mass = boundary_mass(&bd);
        let ones = std::vec![1.0; 64];
        assert!((mass.quad_form(&ones) - 2.0 * PI).abs() < 1e-12);
        assert!(boundary_stiffness(&bd).matvec(&ones).iter().all(|v| v.abs() < 1e-13));
        let bd2 = boundary_geometry(&MetricField::disc(2.0), 256).unwrap();
        let u: Vec<f64> = bd2.theta.iter().map(|t| t.sin()).collect();
        let e = boundary_stiffness(&bd2).quad_form(&u);
        assert!((e - PI / 2.0).abs() < 1e-4, "{e}");
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 9;
        let diag: Vec<f64> = (0..n).map(|j| 3.0 + 0.1 * j as f64).collect();
        let off: Vec<f64> = (0..n).map(|j| -1.0 + 0.05 * j as f64).collect();
        let f = CyclicTridiagonal::factor(&diag, &off).unwrap();
        let mut a = std::vec![0.0; n * n];
        for j in 0..n {
            a[j * n + j] = diag[j];
            let k = (j + 1) % n;
            a[j * n + k] = off[j];
            a[k * n + j] = off[j];
        }
        let x: Vec<f64> = (0..n).map(|j| (j as f64).sin()).collect();
        let mut b = linalg::matvec(&a, n, &x);
        f.solve(&mut b);
        for j in 0..n {
            assert!((b[j] - x[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_circle_closed_spectrum() {
        for n in [64, 1024] {
            let bd = boundary_geometry(&MetricField::disc(1.0), n).unwrap();
            let r = closed_circle_spectrum(&bd, 5).unwrap();
            assert!(r.values[0].abs() < 1e-10);
            let h = 2.0 * PI / n as f64;
            // Linear elements on a uniform circle: 6(1-cos h)/(h^2 (2+cos h)).
            let exact = 6.0 * (1.0 - h.cos()) / (h * h * (2.0 + h.cos()));
            assert!((r.values[1] - exact).abs() < 1e-10 && (r.values[2] - exact).abs() < 1e-10, "{:?}", r.values);
            let e = &r.vectors[1];
            let mass = boundary_mass(&bd);
            assert!((mass.quad_form(e) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn circle_of_length_l() {
        let bd = boundary_geometry(&MetricField::disc(3.0), 256).unwrap();
        let r = closed_circle_spectrum(&bd, 3).unwrap();
        assert!((r.values[1] - 1.0 / 9.0).abs() < 1e-5);
        let bd = boundary_geometry(
            &MetricField::warped(Expr::parse("t*(1+0.2*cos(theta))", &["t", "theta"]).unwrap(), 1.0).unwrap(),
            512,
        )
        .unwrap();
        let r = closed_circle_spectrum(&bd, 3).unwrap();
        // Length is still 2 pi, so the exact value is 1.
        assert!((r.values[1] - 1.0).abs() < 1e-4, "{:?}", r.values);
    }
}
