//! Bilinear finite elements on polar tensor grids and the boundary
//! eigenproblems built on them.
//!
//! Nodes are numbered ring by ring, `i * n_theta + j`, with ring 0 at the
//! inner truncation radius `t0` (natural boundary condition) and ring `n_t`
//! on the rim. The Steklov and Wentzell problems are reduced to the rim by
//! a Schur complement of the stiffness matrix and then solved densely.

mod assemble;
mod dtn;
mod extension;
mod rim;

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::geom::{boundary_geometry, BoundaryData, GeomError, MetricField};
use crate::linalg::{self, LinalgError, SymDense};
use crate::sparse::SymSparse;

pub use assemble::{assemble_stiffness, element_gradient};
pub use dtn::dtn_matrix;
pub use extension::{harmonic_extension, HarmonicField, HarmonicSolver};
pub use rim::{
    assemble_boundary_mass, assemble_boundary_stiffness, boundary_mass, boundary_stiffness, closed_circle_spectrum,
    CyclicTridiagonal,
};

/// Inner truncation radius as a fraction of the outer chart radius.
pub const DEFAULT_T0_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FemError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("interior block singular at ring {ring}")]
    SingularInterior { ring: usize },
    #[error("iteration did not converge after {iterations} steps (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Tensor grid `t_i x theta_j` on the chart of a [`MetricField`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    n_t: usize,
    n_theta: usize,
    t0: f64,
    outer: f64,
}

impl Grid2D {
    /// `n_t` radial elements and `n_theta` angular elements, truncated at
    /// `t0 = 1e-3 * outer`.
    pub fn new(m: &MetricField, n_t: usize, n_theta: usize) -> Result<Self, FemError> {
        Self::with_t0(m, n_t, n_theta, DEFAULT_T0_FRACTION * m.outer())
    }

    pub fn with_t0(m: &MetricField, n_t: usize, n_theta: usize, t0: f64) -> Result<Self, FemError> {
        let outer = m.outer();
        if n_t < 2 {
            return Err(FemError::InvalidGrid("need at least two radial elements"));
        }
        if n_theta < 3 {
            return Err(FemError::InvalidGrid("need at least three angular elements"));
        }
        if !(t0 > 0.0 && t0 < outer) {
            return Err(FemError::InvalidGrid("t0 must lie strictly inside the chart"));
        }
        Ok(Self { n_t, n_theta, t0, outer })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn n_nodes(&self) -> usize {
        (self.n_t + 1) * self.n_theta
    }

    /// Nodes off the rim.
    pub fn n_interior(&self) -> usize {
        self.n_t * self.n_theta
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j % self.n_theta
    }

    /// Index range of the rim nodes, in angular order.
    pub fn boundary_nodes(&self) -> core::ops::Range<usize> {
        self.n_interior()..self.n_nodes()
    }

    pub fn h_t(&self) -> f64 {
        (self.outer - self.t0) / self.n_t as f64
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n_t {
            self.outer
        } else {
            self.t0 + i as f64 * self.h_t()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.h_theta()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem {
    Steklov,
    Wentzell { beta: f64 },
    ClosedBoundary,
}

/// Lowest eigenpairs of a boundary problem.
#[derive(Clone, Debug, PartialEq)]
pub struct EigResult {
    pub problem: Problem,
    /// Ascending.
    pub values: Vec<f64>,
    /// Rim samples, normalized so that `x^T M x = 1` for the rim mass `M`.
    pub vectors: Vec<Vec<f64>>,
    /// `|A x - lambda B x| / |x|` per pair.
    pub residuals: Vec<f64>,
    /// Radial elements (0 for purely one-dimensional problems).
    pub n_t: usize,
    pub n_theta: usize,
    pub t0: f64,
}

impl EigResult {
    /// First nonzero eigenvalue (index 1).
    pub fn first_nonzero(&self) -> Option<f64> {
        self.values.get(1).copied()
    }

    /// Eigenvalues grouped into clusters closer than `tol * (1 + |value|)`,
    /// each with its multiplicity.
    pub fn multiplicities(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some((head, m)) if (v - *head).abs() <= tol * (1.0 + v.abs()) => *m += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

fn dense_pencil(
    problem: Problem,
    a: &[f64],
    b: &[f64],
    n: usize,
    count: usize,
    grid: (usize, usize, f64),
) -> Result<EigResult, FemError> {
    if count == 0 {
        return Err(FemError::InvalidInput("count must be positive"));
    }
    let (values, vectors) = linalg::generalized_eigen(a, b, n)?;
    let keep = count.min(n);
    let values: Vec<f64> = values[..keep].to_vec();
    let vectors: Vec<Vec<f64>> = vectors.into_iter().take(keep).collect();
    let residuals = values.iter().zip(&vectors).map(|(l, x)| pencil_residual(a, b, n, *l, x)).collect();
    Ok(EigResult { problem, values, vectors, residuals, n_t: grid.0, n_theta: grid.1, t0: grid.2 })
}

fn pencil_residual(a: &[f64], b: &[f64], n: usize, lambda: f64, x: &[f64]) -> f64 {
    let ax = linalg::matvec(a, n, x);
    let bx = linalg::matvec(b, n, x);
    let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - lambda * q) * (p - lambda * q)).sum();
    let nx: f64 = x.iter().map(|v| v * v).sum();
    (r / nx).sqrt()
}

/// Everything needed for the boundary eigenproblems on one grid: the
/// Dirichlet-to-Neumann matrix and the rim mass and stiffness forms.
#[derive(Clone, Debug)]
pub struct BoundaryProblem {
    pub grid: Grid2D,
    pub boundary: BoundaryData,
    pub dtn: SymDense,
    pub mass: SymSparse,
    pub rim_stiffness: SymSparse,
}

impl BoundaryProblem {
    pub fn new(m: &MetricField, grid: &Grid2D) -> Result<Self, FemError> {
        let k = assemble_stiffness(m, grid)?;
        let dtn = dtn_matrix(&k, grid)?;
        let boundary = boundary_geometry(m, grid.n_theta())?;
        let mass = boundary_mass(&boundary);
        let rim_stiffness = boundary_stiffness(&boundary);
        Ok(Self { grid: grid.clone(), boundary, dtn, mass, rim_stiffness })
    }

    fn meta(&self) -> (usize, usize, f64) {
        (self.grid.n_t(), self.grid.n_theta(), self.grid.t0())
    }

    /// Weighted Steklov eigenvalues `DtN u = sigma M u`.
    pub fn steklov(&self, count: usize) -> Result<EigResult, FemError> {
        let n = self.dtn.n;
        dense_pencil(Problem::Steklov, &self.dtn.data, &self.mass.to_dense(), n, count, self.meta())
    }

    /// Wentzell eigenvalues `(DtN + beta K) u = tau M u`.
    pub fn wentzell(&self, beta: f64, count: usize) -> Result<EigResult, FemError> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(FemError::InvalidInput("beta must be non-negative"));
        }
        let n = self.dtn.n;
        let mut a = self.dtn.data.clone();
        if beta != 0.0 {
            let k = self.rim_stiffness.to_dense();
            for (x, y) in a.iter_mut().zip(&k) {
                *x += beta * y;
            }
        }
        dense_pencil(Problem::Wentzell { beta }, &a, &self.mass.to_dense(), n, count, self.meta())
    }

    /// Closed eigenvalues of the rim Laplacian on the same rim forms.
    pub fn closed(&self, count: usize) -> Result<EigResult, FemError> {
        closed_circle_spectrum(&self.boundary, count)
    }
}

/// Steklov spectrum of `m` (weighted when `m` carries a weight).
pub fn steklov_spectrum(m: &MetricField, grid: &Grid2D, count: usize) -> Result<EigResult, FemError> {
    BoundaryProblem::new(m, grid)?.steklov(count)
}

/// Wentzell spectrum of `m` with boundary coupling `beta`.
pub fn wentzell_spectrum(m: &MetricField, grid: &Grid2D, beta: f64, count: usize) -> Result<EigResult, FemError> {
    BoundaryProblem::new(m, grid)?.wentzell(beta, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn grid_layout() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 4, 8).unwrap();
        assert_eq!(g.n_nodes(), 40);
        assert_eq!(g.boundary_nodes(), 32..40);
        assert_eq!(g.node(1, 9), 9);
        assert_eq!(g.t(4), 1.0);
        assert!((g.t(0) - 1e-3).abs() < 1e-15);
        assert!(Grid2D::new(&m, 1, 8).is_err());
        assert!(Grid2D::with_t0(&m, 4, 8, 1.5).is_err());
    }

    #[test]
    fn disc_steklov_spectrum() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 64, 64).unwrap();
        let res = steklov_spectrum(&m, &g, 6).unwrap();
        let exact = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        for (v, e) in res.values.iter().zip(exact) {
            assert!((v - e).abs() < 2e-2, "{:?}", res.values);
        }
        let c = &res.vectors[0];
        assert!(c.iter().all(|x| (x - c[0]).abs() < 1e-8));
        assert!(res.residuals.iter().all(|r| *r < 1e-9), "{:?}", res.residuals);
        let mult = res.multiplicities(1e-6);
        assert_eq!(mult[1].1, 2);
    }

    #[test]
    fn wentzell_zero_beta_is_steklov() {
        let m = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&m, 16, 24).unwrap();
        let bp = BoundaryProblem::new(&m, &g).unwrap();
        let s = bp.steklov(5).unwrap();
        let w = bp.wentzell(0.0, 5).unwrap();
        assert_eq!(s.values, w.values);
        assert_eq!(s.vectors, w.vectors);
        let w1 = bp.wentzell(1.0, 3).unwrap();
        assert!((w1.values[1] - 2.0).abs() < 2e-2, "{:?}", w1.values);
        assert!(bp.wentzell(-1.0, 3).is_err());
    }

    #[test]
    fn weighted_disc_has_constant_ground_state() {
        let phi = Expr::parse("(x^2+y^2)/4", &["x", "y"]).unwrap();
        let m = MetricField::disc(1.0).with_weight(phi).unwrap();
        let g = Grid2D::new(&m, 24, 24).unwrap();
        let res = steklov_spectrum(&m, &g, 3).unwrap();
        assert!(res.values[0].abs() < 1e-10);
        assert!(res.values[1] > 0.5);
    }
}
