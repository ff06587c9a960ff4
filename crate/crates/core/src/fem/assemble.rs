use alloc::vec;
use alloc::vec::Vec;

use super::{FemError, Grid2D};
use crate::geom::{MetricField, GAUSS3};
use crate::sparse::SymSparse;

// Local node order in an element: (i, j), (i, j+1), (i+1, j), (i+1, j+1).
// Bilinear shape functions on [0,1]^2 with xi radial and eta angular.
fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [(1.0 - xi) * (1.0 - eta), (1.0 - xi) * eta, xi * (1.0 - eta), xi * eta]
}

fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [[-(1.0 - eta), -(1.0 - xi)], [-eta, 1.0 - xi], [1.0 - eta, -xi], [eta, xi]]
}

pub(super) fn element_nodes(grid: &Grid2D, i: usize, j: usize) -> [usize; 4] {
    [grid.node(i, j), grid.node(i, j + 1), grid.node(i + 1, j), grid.node(i + 1, j + 1)]
}

/// Value and chart gradient `(d/du, d/dtheta)` of the bilinear interpolant of
/// nodal `values` at local coordinates `(xi, eta)` of element `(i, j)`.
pub fn element_gradient(grid: &Grid2D, values: &[f64], i: usize, j: usize, xi: f64, eta: f64) -> (f64, [f64; 2]) {
    let nodes = element_nodes(grid, i, j);
    let n = shape(xi, eta);
    let dn = shape_grad(xi, eta);
    let (hu, hth) = (grid.h_t(), grid.h_theta());
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for k in 0..4 {
        let x = values[nodes[k]];
        v += n[k] * x;
        g[0] += dn[k][0] / hu * x;
        g[1] += dn[k][1] / hth * x;
    }
    (v, g)
}

fn pattern(grid: &Grid2D) -> SymSparse {
    let (nt, nth) = (grid.n_t(), grid.n_theta());
    let mut rows = Vec::with_capacity(grid.n_nodes());
    for i in 0..=nt {
        for j in 0..nth {
            let mut r = Vec::with_capacity(9);
            for ii in i.saturating_sub(1)..=(i + 1).min(nt) {
                for dj in [nth - 1, 0, 1] {
                    r.push(grid.node(ii, j + dj));
                }
            }
            rows.push(r);
        }
    }
    SymSparse::with_pattern(rows)
}

/// Stiffness matrix with per-ring angular averages of the two diagonal
/// coefficients `sqrt(g) g^{aa} e^{-phi}` at the radial Gauss points.
pub(super) struct Assembled {
    pub k: SymSparse,
    pub radial_coef: Vec<[f64; 3]>,
    pub angular_coef: Vec<[f64; 3]>,
}

pub(super) fn assemble_with_profile(m: &MetricField, grid: &Grid2D) -> Result<Assembled, FemError> {
    let mut k = pattern(grid);
    let (nt, nth) = (grid.n_t(), grid.n_theta());
    let (hu, hth) = (grid.h_t(), grid.h_theta());
    let (gp, gw) = GAUSS3;
    // Shape data at the 3x3 Gauss points.
    let mut grads = [[[[0.0; 2]; 4]; 3]; 3];
    for qa in 0..3 {
        for qb in 0..3 {
            let dn = shape_grad(gp[qa], gp[qb]);
            for l in 0..4 {
                grads[qa][qb][l] = [dn[l][0] / hu, dn[l][1] / hth];
            }
        }
    }
    let mut radial_coef = vec![[0.0; 3]; nt];
    let mut angular_coef = vec![[0.0; 3]; nt];
    let mut scratch = Vec::new();
    for i in 0..nt {
        let u0 = grid.t(i);
        for j in 0..nth {
            let th0 = grid.theta(j);
            let mut e = [[0.0; 4]; 4];
            for qa in 0..3 {
                let u = u0 + hu * gp[qa];
                for qb in 0..3 {
                    let th = th0 + hth * gp[qb];
                    let pm = m.metric_at(u, th, &mut scratch)?;
                    let w = m.weight_at(u, th, &mut scratch)?;
                    let jw = gw[qa] * gw[qb] * hu * hth * pm.sqrt_det * w;
                    let c = pm.ginv;
                    let dn = &grads[qa][qb];
                    for a in 0..4 {
                        let ca = [c[0][0] * dn[a][0] + c[0][1] * dn[a][1], c[1][0] * dn[a][0] + c[1][1] * dn[a][1]];
                        for b in a..4 {
                            e[a][b] += jw * (ca[0] * dn[b][0] + ca[1] * dn[b][1]);
                        }
                    }
                    let avg = gw[qb] / nth as f64 * pm.sqrt_det * w;
                    radial_coef[i][qa] += avg * c[0][0];
                    angular_coef[i][qa] += avg * c[1][1];
                }
            }
            let nodes = element_nodes(grid, i, j);
            for a in 0..4 {
                for b in a..4 {
                    k.add(nodes[a], nodes[b], e[a][b]);
                    if a != b {
                        k.add(nodes[b], nodes[a], e[a][b]);
                    }
                }
            }
        }
    }
    Ok(Assembled { k, radial_coef, angular_coef })
}

/// Galerkin matrix of `int g(grad u, grad v) e^{-phi} dv`, with `phi` the
/// weight carried by `m`, using 3x3 Gauss quadrature per element.
pub fn assemble_stiffness(m: &MetricField, grid: &Grid2D) -> Result<SymSparse, FemError> {
    Ok(assemble_with_profile(m, grid)?.k)
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::expr::Expr;
    use core::f64::consts::PI;

    fn nodal(grid: &Grid2D, m: &MetricField, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut scratch = Vec::new();
        let mut v = Vec::with_capacity(grid.n_nodes());
        for i in 0..=grid.n_t() {
            for j in 0..grid.n_theta() {
                let p = m.field_point(grid.t(i), grid.theta(j), &mut scratch).unwrap();
                v.push(f(p[0], p[1]));
            }
        }
        v
    }

    #[test]
    fn disc_energy_of_x() {
        let m = MetricField::disc(1.0);
        let g = Grid2D::new(&m, 32, 64).unwrap();
        let k = assemble_stiffness(&m, &g).unwrap();
        assert_eq!(k.asymmetry(), 0.0);
        let u = nodal(&g, &m, |x, _| x);
        assert!((k.quad_form(&u) - PI).abs() < 5e-3, "{}", k.quad_form(&u));
        let ones = std::vec![1.0; g.n_nodes()];
        assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_weight_scales() {
        let m = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&m, 8, 12).unwrap();
        let k0 = assemble_stiffness(&m, &g).unwrap();
        let mw = m.clone().with_weight(Expr::constant(0.7, &["t", "theta"])).unwrap();
        let k1 = assemble_stiffness(&mw, &g).unwrap();
        let s = (-0.7f64).exp();
        for r in 0..g.n_nodes() {
            let (cols, vals) = k1.row(r);
            for (c, v) in cols.iter().zip(vals) {
                assert!((v - s * k0.get(r, *c)).abs() < 1e-14 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn warped_and_pullback_charts_agree_on_the_disc() {
        let a = MetricField::disc(1.0);
        let b = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&a, 6, 10).unwrap();
        let ka = assemble_stiffness(&a, &g).unwrap();
        let kb = assemble_stiffness(&b, &g).unwrap();
        let u: Vec<f64> = (0..g.n_nodes()).map(|k| ((k * 13) % 7) as f64).collect();
        assert!((ka.quad_form(&u) - kb.quad_form(&u)).abs() < 1e-10 * ka.quad_form(&u));
    }

    #[test]
    fn gradient_of_interpolant() {
        let m = MetricField::euclidean_polar(1.0);
        let g = Grid2D::new(&m, 4, 8).unwrap();
        let vals: Vec<f64> = (0..g.n_nodes()).map(|k| g.t(k / 8)).collect();
        let (v, d) = element_gradient(&g, &vals, 1, 7, 0.5, 0.3);
        assert!((v - 0.5 * (g.t(1) + g.t(2))).abs() < 1e-15);
        assert!((d[0] - 1.0).abs() < 1e-12 && d[1].abs() < 1e-12);
    }
}
