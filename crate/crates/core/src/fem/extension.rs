use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use super::assemble::{assemble_with_profile, Assembled};
use super::rim::{boundary_mass, CyclicTridiagonal};
use super::{FemError, Grid2D};
use crate::fft::Fft;
use crate::geom::{boundary_geometry, MetricField, GAUSS3};
use crate::linalg::dot;
use crate::sparse::SymSparse;

/// Relative residual at which the interior solve stops.
pub const EXTENSION_RTOL: f64 = 1e-12;
const MAX_ITER: usize = 5000;

/// Discrete harmonic function on the whole grid.
#[derive(Clone, Debug)]
pub struct HarmonicField {
    /// Nodal values, ring-major, rim last.
    pub values: Vec<f64>,
    /// Weighted normal derivative on the rim, `M^{-1} (K u)_rim`.
    pub flux: Vec<f64>,
    pub iterations: usize,
    /// Final `|r| / |b|` of the interior solve.
    pub residual: f64,
}

// Separable approximation `A (x) M_theta + B (x) K_theta` of the stiffness,
// built from angular averages of the coefficients and inverted mode by
// mode in theta.
struct TensorPreconditioner {
    fft: Fft,
    n_t: usize,
    n_theta: usize,
    // Per mode: LDL^T of the radial tridiagonal on rings 0..n_t-1.
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TensorPreconditioner {
    fn new(grid: &Grid2D, radial_coef: &[[f64; 3]], angular_coef: &[[f64; 3]]) -> Self {
        let (nt, nth) = (grid.n_t(), grid.n_theta());
        let hu = grid.h_t();
        let (gp, gw) = GAUSS3;
        // Radial forms on nodes 0..=n_t, stored as diagonal and super-diagonal.
        let mut a_diag = vec![0.0; nt + 1];
        let mut a_off = vec![0.0; nt];
        let mut b_diag = vec![0.0; nt + 1];
        let mut b_off = vec![0.0; nt];
        for e in 0..nt {
            let mut a = 0.0;
            let (mut b00, mut b01, mut b11) = (0.0, 0.0, 0.0);
            for q in 0..3 {
                a += gw[q] * radial_coef[e][q];
                let (n0, n1) = (1.0 - gp[q], gp[q]);
                let w = gw[q] * hu * angular_coef[e][q];
                b00 += w * n0 * n0;
                b01 += w * n0 * n1;
                b11 += w * n1 * n1;
            }
            a /= hu;
            a_diag[e] += a;
            a_diag[e + 1] += a;
            a_off[e] -= a;
            b_diag[e] += b00;
            b_diag[e + 1] += b11;
            b_off[e] += b01;
        }
        let h = grid.h_theta();
        let mut d = vec![0.0; nth * nt];
        let mut l = vec![0.0; nth * nt];
        for mode in 0..nth {
            let c = (mode as f64 * h).cos();
            let m_sym = h * (4.0 + 2.0 * c) / 6.0;
            let k_sym = (2.0 - 2.0 * c) / h;
            let (dm, lm) = (&mut d[mode * nt..(mode + 1) * nt], &mut l[mode * nt..(mode + 1) * nt]);
            for i in 0..nt {
                let diag = m_sym * a_diag[i] + k_sym * b_diag[i];
                dm[i] = if i > 0 { diag - lm[i - 1] * lm[i - 1] * dm[i - 1] } else { diag };
                if i + 1 < nt {
                    lm[i] = (m_sym * a_off[i] + k_sym * b_off[i]) / dm[i];
                }
            }
        }
        Self { fft: Fft::new(nth), n_t: nt, n_theta: nth, d, l }
    }

    fn apply(&self, r: &[f64], z: &mut [f64], im: &mut [f64]) {
        let (nt, nth) = (self.n_t, self.n_theta);
        z.copy_from_slice(r);
        im.fill(0.0);
        for i in 0..nt {
            self.fft.forward(&mut z[i * nth..(i + 1) * nth], &mut im[i * nth..(i + 1) * nth]);
        }
        for mode in 0..nth {
            let d = &self.d[mode * nt..(mode + 1) * nt];
            let l = &self.l[mode * nt..(mode + 1) * nt];
            for v in [&mut *z, &mut *im] {
                for i in 1..nt {
                    v[i * nth + mode] -= l[i - 1] * v[(i - 1) * nth + mode];
                }
                for i in 0..nt {
                    v[i * nth + mode] /= d[i];
                }
                for i in (0..nt - 1).rev() {
                    v[i * nth + mode] -= l[i] * v[(i + 1) * nth + mode];
                }
            }
        }
        for i in 0..nt {
            self.fft.inverse(&mut z[i * nth..(i + 1) * nth], &mut im[i * nth..(i + 1) * nth]);
        }
    }
}

/// Stiffness matrix, preconditioner and rim mass of one grid, reusable for
/// many boundary data.
pub struct HarmonicSolver {
    grid: Grid2D,
    k: SymSparse,
    mass: CyclicTridiagonal,
    prec: TensorPreconditioner,
}

impl HarmonicSolver {
    pub fn new(m: &MetricField, grid: &Grid2D) -> Result<Self, FemError> {
        let Assembled { k, radial_coef, angular_coef } = assemble_with_profile(m, grid)?;
        let bd = boundary_geometry(m, grid.n_theta())?;
        let mass = CyclicTridiagonal::from_sparse(&boundary_mass(&bd))?;
        let prec = TensorPreconditioner::new(grid, &radial_coef, &angular_coef);
        Ok(Self { grid: grid.clone(), k, mass, prec })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn stiffness(&self) -> &SymSparse {
        &self.k
    }

    /// Extends rim values `g` (one per angular node) harmonically for the
    /// weighted Laplacian, by preconditioned conjugate gradients on the
    /// interior block.
    pub fn solve(&self, g: &[f64]) -> Result<HarmonicField, FemError> {
        let grid = &self.grid;
        let nth = grid.n_theta();
        let ni = grid.n_interior();
        let nn = grid.n_nodes();
        if g.len() != nth {
            return Err(FemError::InvalidInput("boundary data length must equal n_theta"));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(FemError::InvalidInput("boundary data must be finite"));
        }
        let mean = g.iter().sum::<f64>() / nth as f64;
        let mut full = vec![mean; nn];
        full[ni..].copy_from_slice(g);
        // Right-hand side -K_IG g.
        let mut work = vec![0.0; nn];
        work[ni..].copy_from_slice(g);
        let mut kw = vec![0.0; nn];
        self.k.matvec_into(&work, &mut kw);
        let b: Vec<f64> = kw[..ni].iter().map(|v| -v).collect();
        let b_norm = dot(&b, &b).sqrt();
        let apply_k = |x: &[f64], out: &mut [f64], work: &mut Vec<f64>, kw: &mut Vec<f64>| {
            work[..ni].copy_from_slice(x);
            work[ni..].fill(0.0);
            self.k.matvec_into(work, kw);
            out.copy_from_slice(&kw[..ni]);
        };
        let mut x = full[..ni].to_vec();
        let mut r = vec![0.0; ni];
        apply_k(&x, &mut r, &mut work, &mut kw);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri = bi - *ri;
        }
        let target = EXTENSION_RTOL * b_norm;
        let mut res = dot(&r, &r).sqrt();
        let mut iterations = 0;
        if res > target {
            let mut z = vec![0.0; ni];
            let mut im = vec![0.0; ni];
            self.prec.apply(&r, &mut z, &mut im);
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let mut q = vec![0.0; ni];
            loop {
                iterations += 1;
                apply_k(&p, &mut q, &mut work, &mut kw);
                let alpha = rz / dot(&p, &q);
                for k in 0..ni {
                    x[k] += alpha * p[k];
                    r[k] -= alpha * q[k];
                }
                res = dot(&r, &r).sqrt();
                if res <= target {
                    break;
                }
                if iterations >= MAX_ITER || !res.is_finite() {
                    return Err(FemError::NoConvergence { iterations, residual: res / b_norm });
                }
                self.prec.apply(&r, &mut z, &mut im);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for k in 0..ni {
                    p[k] = z[k] + beta * p[k];
                }
            }
        }
        full[..ni].copy_from_slice(&x);
        self.k.matvec_into(&full, &mut kw);
        let mut flux = kw[ni..].to_vec();
        self.mass.solve(&mut flux);
        let residual = if b_norm > 0.0 { res / b_norm } else { 0.0 };
        Ok(HarmonicField { values: full, flux, iterations, residual })
    }
}

/// One-shot [`HarmonicSolver::solve`].
pub fn harmonic_extension(m: &MetricField, grid: &Grid2D, g: &[f64]) -> Result<HarmonicField, FemError> {
    HarmonicSolver::new(m, grid)?.solve(g)
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;

    #[test]
    fn constant_data_extends_exactly() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 16, 32).unwrap();
        let f = harmonic_extension(&m, &g, &[2.5; 32]).unwrap();
        assert_eq!(f.iterations, 0);
        assert!(f.values.iter().all(|v| *v == 2.5));
        assert!(f.flux.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn trace_of_x_extends_to_x() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 64, 64).unwrap();
        let data: Vec<f64> = (0..64).map(|j| g.theta(j).cos()).collect();
        let f = harmonic_extension(&m, &g, &data).unwrap();
        for i in 0..=64 {
            for j in 0..64 {
                let x = g.t(i) * g.theta(j).cos();
                assert!((f.values[g.node(i, j)] - x).abs() < 1e-3);
            }
        }
        for j in 0..64 {
            assert!((f.flux[j] - data[j]).abs() < 1e-2, "{} {}", f.flux[j], data[j]);
        }
        assert!(f.iterations < 60, "{}", f.iterations);
    }

    #[test]
    fn sin_two_theta() {
        let m = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&m, 64, 64).unwrap();
        let data: Vec<f64> = (0..64).map(|j| (2.0 * g.theta(j)).sin()).collect();
        let f = harmonic_extension(&m, &g, &data).unwrap();
        for i in 0..=64 {
            for j in 0..64 {
                let e = g.t(i).powi(2) * (2.0 * g.theta(j)).sin();
                assert!((f.values[g.node(i, j)] - e).abs() < 2e-3);
            }
        }
    }
}
