//! Two-dimensional metric patches on a polar chart `(u, theta)`.
//!
//! * Warped: `dt^2 + J(t, theta)^2 dtheta^2` on `(0, r] x S^1`. Weights are
//!   expressions in `(t, theta)`.
//! * Pullback: the planar star-shaped domain `s R(theta) (cos, sin)` with
//!   `s in (0, 1]`, pulled back to the chart. Weights are expressions in
//!   Cartesian `(x, y)`.
//!
//! Index 0 of every chart array is the radial coordinate, index 1 is `theta`.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::expr::{EvalError, Expr, Jet2};
use crate::math::min_eig_sym2;
use crate::warp::CurvatureProfile;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric not positive definite at (u, theta) = ({u}, {theta})")]
    NotPositiveDefinite { u: f64, theta: f64 },
    #[error("warping function J = {value} is not positive at (t, theta) = ({t}, {theta})")]
    NonPositiveWarp { t: f64, theta: f64, value: f64 },
    #[error("pole not smooth: J(t, theta)/t = {ratio} at theta = {theta}")]
    PoleNotSmooth { theta: f64, ratio: f64 },
    #[error("operation needs a {0} metric")]
    WrongKind(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    /// `J` over `(t, theta)`; `r` is the outer radius.
    Warped { j: Expr, r: f64 },
    /// Boundary radius `R` over `theta`.
    Pullback { radius: Expr },
}

/// A metric on the polar chart together with an optional weight `phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    kind: MetricKind,
    weight: Option<Expr>,
}

/// Metric, inverse and density at one chart point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMetric {
    pub g: [[f64; 2]; 2],
    pub ginv: [[f64; 2]; 2],
    pub sqrt_det: f64,
}

/// Chart derivatives of the metric, `dg[c][a][b] = d_c g_ab`.
pub type MetricDerivs = [[[f64; 2]; 2]; 2];

/// `gamma[a][b][c] = Gamma^a_bc`.
pub type Christoffels = [[[f64; 2]; 2]; 2];

impl MetricField {
    pub fn warped(j: Expr, r: f64) -> Result<Self, GeomError> {
        if j.dim() != 2 {
            return Err(GeomError::InvalidInput("J must be an expression in (t, theta)"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(GeomError::InvalidInput("outer radius must be positive"));
        }
        Ok(Self { kind: MetricKind::Warped { j, r }, weight: None })
    }

    pub fn pullback(radius: Expr) -> Result<Self, GeomError> {
        if radius.dim() != 1 {
            return Err(GeomError::InvalidInput("R must be an expression in theta"));
        }
        Ok(Self { kind: MetricKind::Pullback { radius }, weight: None })
    }

    /// Euclidean disc of radius `r` in the pullback chart.
    pub fn disc(r: f64) -> Self {
        Self { kind: MetricKind::Pullback { radius: Expr::constant(r, &["theta"]) }, weight: None }
    }

    /// Euclidean disc of radius `r` as the warped metric with `J = t`.
    pub fn euclidean_polar(r: f64) -> Self {
        let j = Expr::parse("t", &["t", "theta"]).expect("literal parses");
        Self { kind: MetricKind::Warped { j, r }, weight: None }
    }

    /// Attaches a weight `phi`, over `(t, theta)` for warped patches and
    /// over `(x, y)` for pullback domains.
    pub fn with_weight(mut self, phi: Expr) -> Result<Self, GeomError> {
        if phi.dim() != 2 {
            return Err(GeomError::InvalidInput("weight must be an expression in two variables"));
        }
        self.weight = Some(phi);
        Ok(self)
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn weight(&self) -> Option<&Expr> {
        self.weight.as_ref()
    }

    pub fn is_warped(&self) -> bool {
        matches!(self.kind, MetricKind::Warped { .. })
    }

    /// Outer value of the radial chart coordinate.
    pub fn outer(&self) -> f64 {
        match &self.kind {
            MetricKind::Warped { r, .. } => *r,
            MetricKind::Pullback { .. } => 1.0,
        }
    }

    /// Coordinates in which the weight is expressed: the chart point for
    /// warped patches, the Cartesian image for pullbacks.
    pub fn field_point(&self, u: f64, theta: f64, scratch: &mut Vec<f64>) -> Result<[f64; 2], GeomError> {
        match &self.kind {
            MetricKind::Warped { .. } => Ok([u, theta]),
            MetricKind::Pullback { radius } => {
                let rr = radius.eval_with(&[theta], scratch)?;
                let (s, c) = theta.sin_cos();
                Ok([u * rr * c, u * rr * s])
            }
        }
    }

    /// Jacobian of the chart-to-field map, `jac[i][a] = d field_i / d u_a`.
    pub fn field_jacobian(&self, u: f64, theta: f64) -> Result<[[f64; 2]; 2], GeomError> {
        match &self.kind {
            MetricKind::Warped { .. } => Ok([[1.0, 0.0], [0.0, 1.0]]),
            MetricKind::Pullback { radius } => {
                let rj = radius.eval_jet2(&[theta])?;
                let (r, dr) = (rj.value, rj.grad[0]);
                let (s, c) = theta.sin_cos();
                Ok([[r * c, u * (dr * c - r * s)], [r * s, u * (dr * s + r * c)]])
            }
        }
    }

    /// `exp(-phi)` at a chart point.
    pub fn weight_at(&self, u: f64, theta: f64, scratch: &mut Vec<f64>) -> Result<f64, GeomError> {
        match &self.weight {
            None => Ok(1.0),
            Some(phi) => {
                let p = self.field_point(u, theta, scratch)?;
                Ok((-phi.eval_with(&p, scratch)?).exp())
            }
        }
    }

    /// Metric at a chart point, checked for positive definiteness.
    pub fn metric_at(&self, u: f64, theta: f64, scratch: &mut Vec<f64>) -> Result<PointMetric, GeomError> {
        let g = match &self.kind {
            MetricKind::Warped { j, .. } => {
                let jv = j.eval_with(&[u, theta], scratch)?;
                if !(jv > 0.0) {
                    return Err(GeomError::NotPositiveDefinite { u, theta });
                }
                return Ok(PointMetric {
                    g: [[1.0, 0.0], [0.0, jv * jv]],
                    ginv: [[1.0, 0.0], [0.0, 1.0 / (jv * jv)]],
                    sqrt_det: jv,
                });
            }
            MetricKind::Pullback { radius } => {
                let rj = radius.eval_jet2(&[theta])?;
                let (r, dr) = (rj.value, rj.grad[0]);
                [[r * r, u * r * dr], [u * r * dr, u * u * (dr * dr + r * r)]]
            }
        };
        invert(g).ok_or(GeomError::NotPositiveDefinite { u, theta })
    }

    /// Metric together with its chart derivatives.
    pub fn metric_jet(&self, u: f64, theta: f64) -> Result<(PointMetric, MetricDerivs), GeomError> {
        let mut dg = [[[0.0; 2]; 2]; 2];
        let g = match &self.kind {
            MetricKind::Warped { j, .. } => {
                let jj = j.eval_jet2(&[u, theta])?;
                let jv = jj.value;
                if !(jv > 0.0) {
                    return Err(GeomError::NotPositiveDefinite { u, theta });
                }
                dg[0][1][1] = 2.0 * jv * jj.grad[0];
                dg[1][1][1] = 2.0 * jv * jj.grad[1];
                [[1.0, 0.0], [0.0, jv * jv]]
            }
            MetricKind::Pullback { radius } => {
                let rj = radius.eval_jet2(&[theta])?;
                let (r, dr, ddr) = (rj.value, rj.grad[0], rj.hess(0, 0));
                let s = u;
                dg[1][0][0] = 2.0 * r * dr;
                dg[0][0][1] = r * dr;
                dg[0][1][0] = r * dr;
                dg[1][0][1] = s * (dr * dr + r * ddr);
                dg[1][1][0] = dg[1][0][1];
                dg[0][1][1] = 2.0 * s * (dr * dr + r * r);
                dg[1][1][1] = s * s * (2.0 * dr * ddr + 2.0 * r * dr);
                [[r * r, s * r * dr], [s * r * dr, s * s * (dr * dr + r * r)]]
            }
        };
        let pm = invert(g).ok_or(GeomError::NotPositiveDefinite { u, theta })?;
        Ok((pm, dg))
    }

    /// Christoffel symbols of the chart metric.
    pub fn christoffels(&self, u: f64, theta: f64) -> Result<Christoffels, GeomError> {
        let (pm, dg) = self.metric_jet(u, theta)?;
        Ok(christoffels_from(&pm.ginv, &dg))
    }

    /// Gauss curvature: `-J_tt / J` for warped patches, zero for planar
    /// pullbacks.
    pub fn gauss_curvature(&self, u: f64, theta: f64) -> Result<f64, GeomError> {
        match &self.kind {
            MetricKind::Warped { j, .. } => {
                let jj = j.eval_jet2(&[u, theta])?;
                if !(jj.value > 0.0) {
                    return Err(GeomError::NonPositiveWarp { t: u, theta, value: jj.value });
                }
                Ok(-jj.hess(0, 0) / jj.value)
            }
            MetricKind::Pullback { .. } => Ok(0.0),
        }
    }

    /// Jet of the weight in field coordinates, if any.
    pub fn weight_jet(&self, u: f64, theta: f64) -> Result<Option<Jet2>, GeomError> {
        match &self.weight {
            None => Ok(None),
            Some(phi) => {
                let mut scratch = Vec::new();
                let p = self.field_point(u, theta, &mut scratch)?;
                Ok(Some(phi.eval_jet2(&p)?))
            }
        }
    }

    /// Cartesian sample points of a pullback domain: the centre plus an
    /// `n_s x n_theta` polar grid reaching the boundary.
    pub fn cartesian_samples(&self, n_s: usize, n_theta: usize) -> Result<Vec<[f64; 2]>, GeomError> {
        let MetricKind::Pullback { radius } = &self.kind else {
            return Err(GeomError::WrongKind("pullback"));
        };
        let mut out = Vec::with_capacity(1 + n_s * n_theta);
        out.push([0.0, 0.0]);
        let mut scratch = Vec::new();
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            let rr = radius.eval_with(&[th], &mut scratch)?;
            let (s, c) = th.sin_cos();
            for i in 1..=n_s {
                let u = i as f64 / n_s as f64;
                out.push([u * rr * c, u * rr * s]);
            }
        }
        Ok(out)
    }
}

fn invert(g: [[f64; 2]; 2]) -> Option<PointMetric> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if !(det > 0.0 && g[0][0] > 0.0) || !det.is_finite() {
        return None;
    }
    Some(PointMetric {
        g,
        ginv: [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]],
        sqrt_det: det.sqrt(),
    })
}

/// `Gamma^a_bc = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)`.
pub fn christoffels_from(ginv: &[[f64; 2]; 2], dg: &MetricDerivs) -> Christoffels {
    let mut gam = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let mut acc = 0.0;
                for d in 0..2 {
                    acc += ginv[a][d] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
                }
                gam[a][b][c] = 0.5 * acc;
            }
        }
    }
    gam
}

/// Rim geometry sampled at `theta_j = 2 pi j / n_theta`, plus three Gauss
/// samples per rim edge for boundary forms.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub outer: f64,
    pub theta: Vec<f64>,
    /// `sqrt(g_theta_theta)` at the rim.
    pub density: Vec<f64>,
    /// Unit outward normal, chart components.
    pub normal: Vec<[f64; 2]>,
    /// Geodesic curvature of the rim (the mean curvature in two dimensions).
    pub kappa_g: Vec<f64>,
    /// `kappa_g + d phi / d eta`.
    pub h_phi: Vec<f64>,
    /// `II(T, T)` for the unit tangent `T`.
    pub second_fundamental: Vec<f64>,
    /// `d phi / d eta`.
    pub dphi_normal: Vec<f64>,
    /// `exp(-phi)` at the nodes.
    pub weight: Vec<f64>,
    /// Per edge `j` (from `theta_j` to `theta_{j+1}`): Gauss points in
    /// `[0, 1]`, their weights, and density and `exp(-phi)` there.
    pub edge_density: Vec<[f64; 3]>,
    pub edge_weight: Vec<[f64; 3]>,
}

/// Three-point Gauss rule on `[0, 1]`.
pub const GAUSS3: ([f64; 3], [f64; 3]) = (
    [0.112_701_665_379_258_31, 0.5, 0.887_298_334_620_741_7],
    [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
);

/// Rim geometry of `m` on `n_theta` equally spaced nodes.
pub fn boundary_geometry(m: &MetricField, n_theta: usize) -> Result<BoundaryData, GeomError> {
    if n_theta < 3 {
        return Err(GeomError::InvalidInput("need at least three rim nodes"));
    }
    let u = m.outer();
    let h = 2.0 * PI / n_theta as f64;
    let mut out = BoundaryData {
        outer: u,
        theta: Vec::with_capacity(n_theta),
        density: Vec::with_capacity(n_theta),
        normal: Vec::with_capacity(n_theta),
        kappa_g: Vec::with_capacity(n_theta),
        h_phi: Vec::with_capacity(n_theta),
        second_fundamental: Vec::with_capacity(n_theta),
        dphi_normal: Vec::with_capacity(n_theta),
        weight: Vec::with_capacity(n_theta),
        edge_density: Vec::with_capacity(n_theta),
        edge_weight: Vec::with_capacity(n_theta),
    };
    let mut scratch = Vec::new();
    for j in 0..n_theta {
        let th = h * j as f64;
        let (pm, dg) = m.metric_jet(u, th)?;
        let gam = christoffels_from(&pm.ginv, &dg);
        let nrm = pm.ginv[0][0].sqrt();
        let eta = [pm.ginv[0][0] / nrm, pm.ginv[1][0] / nrm];
        let kappa = -gam[0][1][1] / nrm / pm.g[1][1];
        let dphi = match m.weight_jet(u, th)? {
            None => 0.0,
            Some(pj) => {
                let jac = m.field_jacobian(u, th)?;
                let mut d = 0.0;
                for i in 0..2 {
                    let e_i = jac[i][0] * eta[0] + jac[i][1] * eta[1];
                    d += pj.grad[i] * e_i;
                }
                d
            }
        };
        out.theta.push(th);
        out.density.push(pm.g[1][1].sqrt());
        out.normal.push(eta);
        out.kappa_g.push(kappa);
        out.second_fundamental.push(kappa);
        out.h_phi.push(kappa + dphi);
        out.dphi_normal.push(dphi);
        out.weight.push(m.weight_at(u, th, &mut scratch)?);
        let mut ed = [0.0; 3];
        let mut ew = [0.0; 3];
        for q in 0..3 {
            let tq = th + h * GAUSS3.0[q];
            let pq = m.metric_at(u, tq, &mut scratch)?;
            ed[q] = pq.g[1][1].sqrt();
            ew[q] = m.weight_at(u, tq, &mut scratch)?;
        }
        out.edge_density.push(ed);
        out.edge_weight.push(ew);
    }
    Ok(out)
}

impl BoundaryData {
    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    /// Angular spacing.
    pub fn h(&self) -> f64 {
        2.0 * PI / self.theta.len() as f64
    }

    /// Weighted rim length `int exp(-phi) ds`.
    pub fn weighted_length(&self) -> f64 {
        let h = self.h();
        let mut acc = crate::math::Sum::new();
        for (d, w) in self.edge_density.iter().zip(&self.edge_weight) {
            for q in 0..3 {
                acc.add(h * GAUSS3.1[q] * d[q] * w[q]);
            }
        }
        acc.value()
    }
}

/// Result of [`radial_curvature_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureReport {
    /// Largest `max(K_rad - k, 0)` over the grid.
    pub max_violation: f64,
    /// `(t, theta, K_rad - k)` where the excess is above `tol`.
    pub violations: Vec<(f64, f64, f64)>,
    /// Largest `|J(t_s, theta)/t_s - 1|` at `t_s = 1e-4 r`.
    pub pole_deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks that the radial curvature `-J_tt/J` stays below `k(t) + tol` on a
/// 64 x 64 grid of `(0, r] x S^1`.
pub fn radial_curvature_check(m: &MetricField, k: &CurvatureProfile, tol: f64) -> Result<CurvatureReport, GeomError> {
    radial_curvature_check_on(m, k, tol, 64, 64)
}

pub fn radial_curvature_check_on(
    m: &MetricField,
    k: &CurvatureProfile,
    tol: f64,
    n_t: usize,
    n_theta: usize,
) -> Result<CurvatureReport, GeomError> {
    let MetricKind::Warped { j, r } = &m.kind else {
        return Err(GeomError::WrongKind("warped"));
    };
    let r = *r;
    let ts = 1e-4 * r;
    let mut pole_dev: f64 = 0.0;
    let mut scratch = Vec::new();
    for jt in 0..n_theta {
        let th = 2.0 * PI * jt as f64 / n_theta as f64;
        let ratio = j.eval_with(&[ts, th], &mut scratch)? / ts;
        pole_dev = pole_dev.max((ratio - 1.0).abs());
        if !((ratio - 1.0).abs() <= 1e-3) {
            return Err(GeomError::PoleNotSmooth { theta: th, ratio });
        }
    }
    let mut max_violation: f64 = 0.0;
    let mut violations = Vec::new();
    for it in 1..=n_t {
        let t = r * it as f64 / n_t as f64;
        let kt = k.eval(t).ok_or(GeomError::InvalidInput("curvature profile not finite"))?;
        for jt in 0..n_theta {
            let th = 2.0 * PI * jt as f64 / n_theta as f64;
            let jj = j.eval_jet2(&[t, th])?;
            if !(jj.value > 0.0) {
                return Err(GeomError::NonPositiveWarp { t, theta: th, value: jj.value });
            }
            let excess = -jj.hess(0, 0) / jj.value - kt;
            max_violation = max_violation.max(excess);
            if excess > tol {
                violations.push((t, th, excess));
            }
        }
    }
    Ok(CurvatureReport { max_violation, passed: max_violation <= tol, violations, pole_deviation: pole_dev, tol })
}

/// Result of [`convexity_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    pub at: [f64; 2],
    pub passed: bool,
}

/// Smallest Hessian eigenvalue of `phi(x, y)` over `points`; passes when it
/// is at least `-tol`.
pub fn convexity_check(phi: &Expr, points: &[[f64; 2]], tol: f64) -> Result<ConvexityReport, GeomError> {
    if phi.dim() != 2 {
        return Err(GeomError::InvalidInput("weight must be an expression in (x, y)"));
    }
    let mut min_eig = f64::INFINITY;
    let mut at = [0.0; 2];
    let mut scratch = Vec::new();
    for p in points {
        let jt = phi.eval_jet2_with(p, &mut scratch)?;
        let e = min_eig_sym2(jt.hess(0, 0), jt.hess(0, 1), jt.hess(1, 1));
        if e < min_eig {
            min_eig = e;
            at = *p;
        }
    }
    Ok(ConvexityReport { min_eigenvalue: min_eig, at, passed: min_eig >= -tol })
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;

    fn warped(j: &str, r: f64) -> MetricField {
        MetricField::warped(Expr::parse(j, &["t", "theta"]).unwrap(), r).unwrap()
    }

    #[test]
    fn polar_christoffels() {
        let m = MetricField::euclidean_polar(1.0);
        let g = m.christoffels(0.7, 1.0).unwrap();
        assert!((g[0][1][1] + 0.7).abs() < 1e-15);
        assert!((g[1][0][1] - 1.0 / 0.7).abs() < 1e-15);
        assert!((g[1][1][0] - 1.0 / 0.7).abs() < 1e-15);
        for (a, b, c) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
            assert_eq!(g[a][b][c], 0.0);
        }
        let d = MetricField::disc(1.0);
        for th in [0.0, 1.0, 2.5] {
            let gp = d.christoffels(0.7, th).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        assert!((gp[a][b][c] - g[a][b][c]).abs() < 1e-14);
                    }
                }
            }
        }
        let s = warped("sin(t)", 2.0);
        let g = s.christoffels(PI / 4.0, 0.0).unwrap();
        let e = -(PI / 4.0).sin() * (PI / 4.0).cos();
        assert!((g[0][1][1] - e).abs() < 1e-15);
    }

    #[test]
    fn sphere_gauss_curvature_is_one() {
        let m = warped("sin(t)", 2.0);
        let mut x = 7u64;
        for _ in 0..100 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let t = 0.05 + 1.9 * ((x >> 11) as f64 / (1u64 << 53) as f64);
            let th = 2.0 * PI * ((x >> 20) as f64 / (1u64 << 44) as f64);
            assert!((m.gauss_curvature(t, th).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn disc_boundary_data() {
        let b = boundary_geometry(&MetricField::euclidean_polar(1.0), 32).unwrap();
        for j in 0..32 {
            assert!((b.kappa_g[j] - 1.0).abs() < 1e-14);
            assert!((b.h_phi[j] - 1.0).abs() < 1e-14);
            assert!(b.density[j] > 0.0);
        }
        let phi = Expr::parse("x", &["x", "y"]).unwrap();
        let m = MetricField::disc(2.0).with_weight(phi).unwrap();
        let b = boundary_geometry(&m, 40).unwrap();
        for j in 0..40 {
            assert!((b.kappa_g[j] - 0.5).abs() < 1e-14);
            assert!((b.h_phi[j] - (0.5 + b.theta[j].cos())).abs() < 1e-14);
        }
        let s = boundary_geometry(&warped("sin(t)", PI / 3.0), 16).unwrap();
        let cot = (PI / 3.0).cos() / (PI / 3.0).sin();
        for k in &s.kappa_g {
            assert!((k - cot).abs() < 1e-14);
        }
    }

    #[test]
    fn pullback_and_polar_rims_agree() {
        let a = boundary_geometry(&MetricField::euclidean_polar(1.0), 24).unwrap();
        let b = boundary_geometry(&MetricField::disc(1.0), 24).unwrap();
        for j in 0..24 {
            assert!((a.kappa_g[j] - b.kappa_g[j]).abs() < 1e-10);
            assert!((a.density[j] - b.density[j]).abs() < 1e-10);
            assert!((a.normal[j][0] - b.normal[j][0]).abs() < 1e-10);
        }
        assert!((a.weighted_length() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn star_domain_curvature_integrates_to_two_pi() {
        // Total geodesic curvature of a simple closed planar curve is 2 pi.
        let r = Expr::parse("1 + 0.2*cos(3*theta)", &["theta"]).unwrap();
        let b = boundary_geometry(&MetricField::pullback(r).unwrap(), 256).unwrap();
        let h = b.h();
        let total: f64 = (0..256).map(|j| b.kappa_g[j] * b.density[j] * h).sum();
        assert!((total - 2.0 * PI).abs() < 1e-10, "{total}");
    }

    #[test]
    fn curvature_checks() {
        let rep = radial_curvature_check(&warped("sin(t)", 1.0), &CurvatureProfile::Constant(1.0), 1e-12).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_violation, 0.0);
        let rep = radial_curvature_check(&warped("t", 1.0), &CurvatureProfile::Constant(0.0), 1e-12).unwrap();
        assert!(rep.passed && rep.max_violation == 0.0);
        let bad = warped("2*t", 1.0);
        assert!(matches!(
            radial_curvature_check(&bad, &CurvatureProfile::Constant(0.0), 1e-12),
            Err(GeomError::PoleNotSmooth { .. })
        ));
    }

    #[test]
    fn convexity_examples() {
        let pts = MetricField::disc(1.0).cartesian_samples(8, 16).unwrap();
        let c = |s: &str| convexity_check(&Expr::parse(s, &["x", "y"]).unwrap(), &pts, 1e-12).unwrap();
        let lin = c("x + 2*y");
        assert!(lin.passed && lin.min_eigenvalue == 0.0);
        assert!(c("x^2 + y^2").passed);
        let sad = c("x^2 - y^2");
        assert!(!sad.passed);
        assert!((sad.min_eigenvalue + 2.0).abs() < 1e-14);
    }
}
