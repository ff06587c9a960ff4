//! Eigenvalue inequalities as verdict-producing harnesses.
//!
//! Each check solves the relevant boundary problems on a fine grid and on the
//! grid with half the resolution. The difference of the two slacks, divided
//! by three, is the discretization allowance added to the absolute
//! tolerance (the solvers converge at second order).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::expr::Expr;
use crate::fem::{assemble_stiffness, BoundaryProblem, FemError, Grid2D};
use crate::geom::{
    boundary_geometry, convexity_check, radial_curvature_check, CurvatureReport, GeomError, MetricField, MetricKind,
    GAUSS3,
};
use crate::radial::{closed_sphere_lambda1, model_p1, steklov_mode, RadialError, DEFAULT_ELL_MAX};
use crate::warp::{solve_warping, CurvatureProfile, WarpError};

/// Absolute part of every inequality tolerance.
pub const SLACK_TOL: f64 = 1e-6;
/// Tolerance of the near-equality smoke tests on model inputs.
pub const EQUALITY_TOL: f64 = 2e-3;
const MODEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ComparisonError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("curvature precondition failed: max excess {:.3e} at {} samples", .0.max_violation, .0.violations.len())]
    Curvature(CurvatureReport),
    #[error("precondition failed: {0:?}")]
    Precondition(PreconditionReport),
    #[error("trial function vanishes identically (a ranges over [{a_min:.6e}, {a_max:.6e}])")]
    DegenerateTrialFunction {
        a_min: f64,
        a_max: f64,
        /// Whether `max{a, 0}` would have been non-trivial.
        max_variant_nontrivial: bool,
    },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Outcome of one precondition.
#[derive(Clone, Debug, PartialEq)]
pub struct PreconditionReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value of the checked quantity.
    pub worst: f64,
    pub detail: String,
}

impl PreconditionReport {
    fn new(name: &'static str, passed: bool, worst: f64, detail: String) -> Self {
        Self { name, passed, worst, detail }
    }

    fn require(self) -> Result<Self, ComparisonError> {
        if self.passed {
            Ok(self)
        } else {
            Err(ComparisonError::Precondition(self))
        }
    }
}

/// Radial and angular element counts of the fine grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub n_t: usize,
    pub n_theta: usize,
}

impl Resolution {
    pub fn new(n_t: usize, n_theta: usize) -> Self {
        Self { n_t, n_theta }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    fn coarse(self) -> Self {
        Self::new((self.n_t / 2).max(2), (self.n_theta / 2).max(3))
    }

    fn grid(self, m: &MetricField) -> Result<Grid2D, ComparisonError> {
        Ok(Grid2D::new(m, self.n_t, self.n_theta)?)
    }
}

/// Result of an inequality `lhs <= rhs`, stated so that
/// `slack = rhs - lhs` and `pass` iff `slack >= -tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonVerdict {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Slack of the same check on the coarse grid.
    pub coarse_slack: f64,
    pub tolerance: f64,
    pub preconditions: Vec<PreconditionReport>,
    /// Extra quantities computed on the fine grid.
    pub quantities: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub resolution: Resolution,
    pub pass: bool,
}

impl ComparisonVerdict {
    fn new(case: String, fine: (f64, f64), coarse: (f64, f64), abs_tol: f64, resolution: Resolution) -> Self {
        let slack = fine.1 - fine.0;
        let coarse_slack = coarse.1 - coarse.0;
        let tolerance = abs_tol + (slack - coarse_slack).abs() / 3.0;
        Self {
            case,
            lhs: fine.0,
            rhs: fine.1,
            slack,
            coarse_slack,
            tolerance,
            preconditions: Vec::new(),
            quantities: Vec::new(),
            notes: Vec::new(),
            resolution,
            pass: slack >= -tolerance,
        }
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|q| q.0 == name).map(|q| q.1)
    }

    fn push(&mut self, name: &str, v: f64) {
        self.quantities.push((String::from(name), v));
    }
}

// tau_1, lambda_1^c, p_1 of one grid.
fn boundary_triple(m: &MetricField, res: Resolution, beta: f64) -> Result<(f64, f64, f64), ComparisonError> {
    let bp = BoundaryProblem::new(m, &res.grid(m)?)?;
    let tau = bp.wentzell(beta, 2)?.values[1];
    let lam = bp.closed(2)?.values[1];
    let p = bp.steklov(2)?.values[1];
    Ok((tau, lam, p))
}

/// `tau_1 >= beta lambda_1^c + p_1` on one metric and grid.
pub fn fact1_check(m: &MetricField, beta: f64, res: Resolution) -> Result<ComparisonVerdict, ComparisonError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(ComparisonError::InvalidInput("beta must be non-negative"));
    }
    let (tau, lam, p) = boundary_triple(m, res, beta)?;
    let (tc, lc, pc) = boundary_triple(m, res.coarse(), beta)?;
    let mut v = ComparisonVerdict::new(
        format!("fact1 beta={beta}"),
        (beta * lam + p, tau),
        (beta * lc + pc, tc),
        SLACK_TOL,
        res,
    );
    v.push("tau1", tau);
    v.push("lambda1_closed", lam);
    v.push("p1", p);
    Ok(v)
}

/// Model ball of a curvature bound: warping solution, `p_1`, and the closed
/// eigenvalue `1 / f(r)^2` of its boundary circle.
struct Model {
    sol: crate::warp::WarpingSolution,
    p1: f64,
    lambda1: f64,
}

fn model(k: &CurvatureProfile, r: f64) -> Result<Model, ComparisonError> {
    let sol = solve_warping(k.clone(), r, MODEL_TOL)?;
    if let Some(l) = sol.l_pos {
        if !(r < l) {
            return Err(ComparisonError::Precondition(PreconditionReport::new(
                "radius below first zero of f",
                false,
                l,
                format!("r = {r} is not below l = {l}"),
            )));
        }
    }
    let p1 = model_p1(&sol, 2, r, DEFAULT_ELL_MAX, MODEL_TOL)?.mode.p;
    let lambda1 = closed_sphere_lambda1(&sol, 2, r)?;
    Ok(Model { sol, p1, lambda1 })
}

fn warped_radius(m: &MetricField) -> Result<f64, ComparisonError> {
    match m.kind() {
        MetricKind::Warped { r, .. } => Ok(*r),
        _ => Err(ComparisonError::InvalidInput("comparison needs a warped metric")),
    }
}

fn curvature_precondition(m: &MetricField, k: &CurvatureProfile) -> Result<PreconditionReport, ComparisonError> {
    let rep = radial_curvature_check(m, k, 1e-9)?;
    if !rep.passed {
        return Err(ComparisonError::Curvature(rep));
    }
    Ok(PreconditionReport::new(
        "radial curvature below k",
        true,
        rep.max_violation,
        format!("max excess {:.3e} on a 64 x 64 grid", rep.max_violation),
    ))
}

// Largest |J(t, theta) - f(t)| / f(t) on a sample grid.
fn distance_to_model(m: &MetricField, sol: &crate::warp::WarpingSolution) -> Result<f64, ComparisonError> {
    let MetricKind::Warped { j, r } = m.kind() else { unreachable!() };
    let mut worst: f64 = 0.0;
    let mut scratch = Vec::new();
    for i in 1..=32 {
        let t = r * i as f64 / 32.0;
        let f = sol.warp_at(t)?.0;
        for q in 0..16 {
            let th = 2.0 * core::f64::consts::PI * q as f64 / 16.0;
            let jv = j.eval_with(&[t, th], &mut scratch).map_err(GeomError::from)?;
            worst = worst.max((jv - f).abs() / f);
        }
    }
    Ok(worst)
}

/// `tau_1(B) <= tau_1(model ball)` for a warped ball whose radial curvature
/// is bounded above by `k`.
pub fn wentzell_comparison(
    m: &MetricField,
    k: &CurvatureProfile,
    beta: f64,
    res: Resolution,
) -> Result<ComparisonVerdict, ComparisonError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(ComparisonError::InvalidInput("beta must be non-negative"));
    }
    let r = warped_radius(m)?;
    let pre = curvature_precondition(m, k)?;
    let md = model(k, r)?;
    let rhs = md.p1 + beta * md.lambda1;
    let (tau, lam, p) = boundary_triple(m, res, beta)?;
    let (tc, _, _) = boundary_triple(m, res.coarse(), beta)?;
    let mut v = ComparisonVerdict::new(format!("wentzell beta={beta} r={r}"), (tau, rhs), (tc, rhs), SLACK_TOL, res);
    v.preconditions.push(pre);
    v.push("tau1_ball", tau);
    v.push("p1_ball", p);
    v.push("lambda1_closed_ball", lam);
    v.push("p1_model", md.p1);
    v.push("lambda1_closed_model", md.lambda1);
    v.push("tau1_model", rhs);
    let dist = distance_to_model(m, &md.sol)?;
    v.push("distance_to_model", dist);
    if dist < 1e-9 {
        let eq = v.slack.abs() < EQUALITY_TOL;
        v.notes.push(format!("metric is the model: |slack| = {:.3e}, equality tolerance {EQUALITY_TOL}", v.slack.abs()));
        v.pass &= eq;
    }
    Ok(v)
}

/// Which truncation of `a` builds the trial function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// `a_+ = min{a, 0}`, as written.
    Min,
    /// `max{a, 0}`, reported as an alternative only.
    Max,
}

/// Profiles of the trial function `a_+(t) e_1(theta)` and its Rayleigh
/// quotient.
#[derive(Clone, Debug)]
pub struct TestFunctionBundle {
    /// Rim eigenfunction samples.
    pub e1: Vec<f64>,
    pub lambda1_closed: f64,
    /// Radial nodes, including the points where `h` switches branch.
    pub t: Vec<f64>,
    pub d_star: Vec<f64>,
    pub d_sharp: Vec<f64>,
    pub h: Vec<f64>,
    pub a: Vec<f64>,
    pub a_plus: Vec<f64>,
    /// Number of inserted branch points.
    pub kinks: usize,
    pub truncation: Truncation,
    pub rq: f64,
    pub tau1_ball: f64,
    pub p1_model: f64,
    pub lambda1_closed_model: f64,
}

impl TestFunctionBundle {
    /// Links of `tau_1(B) <= RQ <= p_1(model) + beta lambda_1^c(B)
    /// <= p_1(model) + beta lambda_1^c(model)` as slacks.
    pub fn chain_slacks(&self, beta: f64) -> [f64; 3] {
        let mid = self.p1_model + beta * self.lambda1_closed;
        let top = self.p1_model + beta * self.lambda1_closed_model;
        [self.rq - self.tau1_ball, mid - self.rq, top - mid]
    }
}

// d*(t) and d#(t) at one radius for piecewise linear e1.
fn angular_integrals(j: &Expr, t: f64, e1: &[f64], scratch: &mut Vec<f64>) -> Result<(f64, f64), ComparisonError> {
    let n = e1.len();
    let h = 2.0 * core::f64::consts::PI / n as f64;
    let (gp, gw) = GAUSS3;
    let (mut ds, mut dh) = (0.0, 0.0);
    for k in 0..n {
        let (a, b) = (e1[k], e1[(k + 1) % n]);
        let de = (b - a) / h;
        for q in 0..3 {
            let th = h * (k as f64 + gp[q]);
            let jv = j.eval_with(&[t, th], scratch).map_err(GeomError::from)?;
            let e = a + (b - a) * gp[q];
            ds += gw[q] * h * de * de / jv;
            dh += gw[q] * h * e * e * jv;
        }
    }
    Ok((ds, dh))
}

/// Builds `phi = a_+(t) e_1(theta)` on the grid of `res` and evaluates its
/// Wentzell Rayleigh quotient. `e1` overrides the computed rim eigenfunction.
pub fn test_function_rq(
    m: &MetricField,
    k: &CurvatureProfile,
    beta: f64,
    res: Resolution,
    truncation: Truncation,
    e1: Option<&[f64]>,
) -> Result<TestFunctionBundle, ComparisonError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(ComparisonError::InvalidInput("beta must be non-negative"));
    }
    let MetricKind::Warped { j, r } = m.kind() else {
        return Err(ComparisonError::InvalidInput("comparison needs a warped metric"));
    };
    let r = *r;
    curvature_precondition(m, k)?;
    let md = model(k, r)?;
    let grid = res.grid(m)?;
    let bp = BoundaryProblem::new(m, &grid)?;
    let closed = bp.closed(2)?;
    let e1: Vec<f64> = match e1 {
        Some(e) if e.len() != grid.n_theta() => return Err(ComparisonError::InvalidInput("e1 length must equal n_theta")),
        Some(e) => e.to_vec(),
        None => closed.vectors[1].clone(),
    };
    let me = bp.mass.matvec(&e1);
    let mean: f64 = me.iter().sum();
    let norm = bp.mass.quad_form(&e1).max(0.0).sqrt();
    let total: f64 = bp.mass.matvec(&vec![1.0; e1.len()]).iter().sum::<f64>().sqrt();
    if !(norm > 0.0) || mean.abs() > 1e-8 * norm * total {
        return Err(ComparisonError::Precondition(PreconditionReport::new(
            "rim mean zero",
            false,
            mean,
            format!("int e1 dA = {mean:.3e}"),
        )));
    }
    let mode = steklov_mode(&md.sol, 2, 1, r, MODEL_TOL)?;

    // Radial samples: grid nodes plus branch switches of h.
    let mut scratch = Vec::new();
    let mut profile = |t: f64| -> Result<(f64, f64, f64), ComparisonError> {
        let (ds, dh) = angular_integrals(j, t, &e1, &mut scratch)?;
        let f = md.sol.warp_at(t)?.0;
        Ok((ds, dh, f))
    };
    let nodes: Vec<f64> = (0..=grid.n_t()).map(|i| grid.t(i)).collect();
    let mut t = Vec::with_capacity(nodes.len() + 4);
    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(nodes.len() + 4);
    let switch = |(ds, dh, f): (f64, f64, f64)| ds - f * f * dh;
    let mut kinks = 0;
    for (i, &ti) in nodes.iter().enumerate() {
        let row = profile(ti)?;
        if i > 0 {
            let prev = rows[rows.len() - 1];
            let (s0, s1) = (switch(prev), switch(row));
            if s0 * s1 < 0.0 {
                let (mut lo, mut hi) = (nodes[i - 1], ti);
                let mut s_lo = s0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let sm = switch(profile(mid)?);
                    if (sm < 0.0) == (s_lo < 0.0) {
                        lo = mid;
                        s_lo = sm;
                    } else {
                        hi = mid;
                    }
                }
                let tk = 0.5 * (lo + hi);
                t.push(tk);
                rows.push(profile(tk)?);
                kinks += 1;
            }
        }
        t.push(ti);
        rows.push(row);
    }
    let n = t.len();
    let d_star: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let d_sharp: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let h: Vec<f64> = rows.iter().map(|r| r.0.max(r.2 * r.2 * r.1)).collect();
    let w: Vec<f64> = rows.iter().zip(&h).map(|(r, h)| (r.2 / h).sqrt()).collect();
    let psi: Vec<f64> = t.iter().map(|&s| mode.eval(s).0).collect();
    // a(t) = psi w + int_t^r psi w' ds, the Stieltjes integral by trapezoids.
    let mut a = vec![0.0; n];
    let mut tail = 0.0;
    for i in (0..n).rev() {
        if i + 1 < n {
            tail += 0.5 * (psi[i] + psi[i + 1]) * (w[i + 1] - w[i]);
        }
        a[i] = psi[i] * w[i] + tail;
    }
    let a_min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let a_plus: Vec<f64> = match truncation {
        Truncation::Min => a.iter().map(|v| v.min(0.0)).collect(),
        Truncation::Max => a.iter().map(|v| v.max(0.0)).collect(),
    };
    if a_plus.iter().all(|v| *v == 0.0) || a_plus[n - 1] == 0.0 {
        return Err(ComparisonError::DegenerateTrialFunction { a_min, a_max, max_variant_nontrivial: a_max > 0.0 });
    }

    // Nodal trial function; the inserted branch points are not grid nodes.
    let at_node: Vec<f64> = nodes.iter().map(|s| a_plus[t.iter().position(|x| x == s).expect("node kept")]).collect();
    let nth = grid.n_theta();
    let mut phi = Vec::with_capacity(grid.n_nodes());
    for ai in &at_node {
        for ej in &e1 {
            phi.push(ai * ej);
        }
    }
    let kmat = assemble_stiffness(m, &grid)?;
    let rim = &phi[grid.n_interior()..];
    let num = kmat.quad_form(&phi) + beta * bp.rim_stiffness.quad_form(rim);
    let den = bp.mass.quad_form(rim);
    let rq = num / den;
    let tau1_ball = bp.wentzell(beta, 2)?.values[1];
    debug_assert_eq!(rim.len(), nth);
    Ok(TestFunctionBundle {
        e1,
        lambda1_closed: closed.values[1],
        t,
        d_star,
        d_sharp,
        h,
        a,
        a_plus,
        kinks,
        truncation,
        rq,
        tau1_ball,
        p1_model: md.p1,
        lambda1_closed_model: md.lambda1,
    })
}

fn pullback_only(domain: &MetricField) -> Result<(), ComparisonError> {
    if domain.is_warped() || domain.weight().is_some() {
        return Err(ComparisonError::InvalidInput("domain must be an unweighted pullback metric"));
    }
    Ok(())
}

fn convexity_precondition(domain: &MetricField, phi: &Expr) -> Result<PreconditionReport, ComparisonError> {
    let pts = domain.cartesian_samples(24, 64)?;
    let c = convexity_check(phi, &pts, 1e-12)?;
    PreconditionReport::new(
        "weight convex",
        c.passed,
        c.min_eigenvalue,
        format!("min Hessian eigenvalue {:.3e} at ({:.3}, {:.3})", c.min_eigenvalue, c.at[0], c.at[1]),
    )
    .require()
}

fn sigma1(domain: &MetricField, phi: &Expr, res: Resolution) -> Result<f64, ComparisonError> {
    let weighted = domain.clone().with_weight(phi.clone())?;
    let bp = BoundaryProblem::new(&weighted, &res.grid(&weighted)?)?;
    Ok(bp.steklov(2)?.values[1])
}

/// `sigma_1 >= c` for a convex weight on a planar domain whose boundary
/// curvature is at least `c`.
pub fn steklov_lower_bound_check(
    domain: &MetricField,
    phi: &Expr,
    c: f64,
    res: Resolution,
    tol: f64,
) -> Result<ComparisonVerdict, ComparisonError> {
    pullback_only(domain)?;
    if !(c > 0.0) {
        return Err(ComparisonError::InvalidInput("c must be positive"));
    }
    let convex = convexity_precondition(domain, phi)?;
    let bd = boundary_geometry(domain, res.n_theta)?;
    let kmin = bd.kappa_g.iter().cloned().fold(f64::INFINITY, f64::min);
    let curv = PreconditionReport::new(
        "boundary curvature at least c",
        kmin >= c - tol,
        kmin,
        format!("min curvature {kmin:.6e}, c = {c}"),
    )
    .require()?;
    let s = sigma1(domain, phi, res)?;
    let sc = sigma1(domain, phi, res.coarse())?;
    let mut v = ComparisonVerdict::new(format!("steklov-bound c={c}"), (c, s), (c, sc), tol, res);
    let flat = convex.worst.abs() < 1e-12;
    v.preconditions.push(convex);
    v.preconditions.push(curv);
    v.push("sigma1", s);
    v.push("min_curvature", kmin);
    if flat {
        v.notes.push(format!("flat weight Hessian: sigma1 - c = {:.3e}", s - c));
    }
    Ok(v)
}

/// `sigma_1 > c / 2` under boundary curvature `> c` and `H^phi > c`.
pub fn escobar_half_bound_check(
    domain: &MetricField,
    phi: &Expr,
    c: f64,
    res: Resolution,
    tol: f64,
) -> Result<ComparisonVerdict, ComparisonError> {
    pullback_only(domain)?;
    if !(c > 0.0) {
        return Err(ComparisonError::InvalidInput("c must be positive"));
    }
    let convex = convexity_precondition(domain, phi)?;
    let weighted = domain.clone().with_weight(phi.clone())?;
    let bd = boundary_geometry(&weighted, res.n_theta)?;
    let kmin = bd.kappa_g.iter().cloned().fold(f64::INFINITY, f64::min);
    let hmin = bd.h_phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let curv =
        PreconditionReport::new("boundary curvature above c", kmin > c, kmin, format!("min curvature {kmin:.6e}, c = {c}"))
            .require()?;
    let hphi = PreconditionReport::new(
        "H^phi = kappa + phi_eta above c",
        hmin > c,
        hmin,
        format!("min kappa + phi_eta {hmin:.6e}, c = {c}"),
    )
    .require()?;
    // The drift-consistent weighted mean curvature, reported only.
    let alt = bd.kappa_g.iter().zip(&bd.dphi_normal).map(|(k, d)| k - d).fold(f64::INFINITY, f64::min);
    let s = sigma1(domain, phi, res)?;
    let sc = sigma1(domain, phi, res.coarse())?;
    let mut v = ComparisonVerdict::new(format!("escobar c={c}"), (0.5 * c, s), (0.5 * c, sc), tol, res);
    v.preconditions.push(convex);
    v.preconditions.push(curv);
    v.preconditions.push(hphi);
    v.push("sigma1", s);
    v.push("min_kappa_minus_phi_eta", alt);
    if alt <= c {
        v.notes.push(format!("kappa - phi_eta reaches {alt:.3e} <= c"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;

    fn warped(j: &str, r: f64) -> MetricField {
        MetricField::warped(Expr::parse(j, &["t", "theta"]).unwrap(), r).unwrap()
    }

    #[test]
    fn fact1_on_the_disc_is_an_equality() {
        let v = fact1_check(&MetricField::disc(1.0), 1.0, Resolution::square(64)).unwrap();
        assert!(v.pass);
        assert!(v.slack.abs() < 2e-3, "{v:?}");
    }

    #[test]
    fn fact1_with_zero_beta() {
        let v = fact1_check(&warped("t*(1+0.1*t^2*cos(2*theta))", 1.0), 0.0, Resolution::square(32)).unwrap();
        assert_eq!(v.slack, 0.0);
        assert_eq!(v.quantity("tau1"), v.quantity("p1"));
    }

    #[test]
    fn curvature_precondition_aborts() {
        let m = warped("t*(1-0.05*t^2)", 1.0);
        let e = wentzell_comparison(&m, &CurvatureProfile::Constant(0.0), 0.5, Resolution::square(16)).unwrap_err();
        assert!(matches!(e, ComparisonError::Curvature(ref r) if r.max_violation > 0.2), "{e:?}");
    }

    #[test]
    fn model_against_itself() {
        let m = warped("sin(t)", core::f64::consts::PI / 3.0);
        let v = wentzell_comparison(&m, &CurvatureProfile::Constant(1.0), 1.0, Resolution::square(64)).unwrap();
        assert!(v.pass && v.slack.abs() < 2e-3, "{v:?}");
        assert!(v.quantity("distance_to_model").unwrap() < 1e-9);
    }

    #[test]
    fn paper_truncation_degenerates_on_the_model() {
        let m = MetricField::euclidean_polar(1.0);
        let e = test_function_rq(&m, &CurvatureProfile::Constant(0.0), 1.0, Resolution::square(32), Truncation::Min, None)
            .unwrap_err();
        assert!(matches!(e, ComparisonError::DegenerateTrialFunction { max_variant_nontrivial: true, .. }), "{e:?}");
    }

    #[test]
    fn constant_e1_is_rejected() {
        let m = MetricField::euclidean_polar(1.0);
        let ones = std::vec![1.0; 32];
        let e = test_function_rq(
            &m,
            &CurvatureProfile::Constant(0.0),
            1.0,
            Resolution::square(32),
            Truncation::Max,
            Some(&ones),
        )
        .unwrap_err();
        assert!(matches!(e, ComparisonError::Precondition(ref p) if p.name == "rim mean zero"));
    }

    #[test]
    fn h_dominates_both_profiles() {
        let m = warped("t + 0.05*t^3*(1+0.5*cos(2*theta))", 1.0);
        let b = test_function_rq(&m, &CurvatureProfile::Constant(0.35), 1.0, Resolution::square(32), Truncation::Max, None)
            .unwrap();
        let sol = solve_warping(CurvatureProfile::Constant(0.35), 1.0, 1e-10).unwrap();
        for i in 0..b.t.len() {
            let f = sol.warp_at(b.t[i]).unwrap().0;
            assert!(b.h[i] >= b.d_star[i] && b.h[i] >= f * f * b.d_sharp[i]);
        }
        assert!(b.rq >= b.tau1_ball - 1e-9);
    }

    #[test]
    fn disc_lower_bound() {
        let v = steklov_lower_bound_check(&MetricField::disc(1.0), &Expr::constant(0.0, &["x", "y"]), 1.0, Resolution::square(64), 2e-3)
            .unwrap();
        assert!(v.pass && (v.rhs - 1.0).abs() < 2e-3, "{v:?}");
    }

    #[test]
    fn escobar_precondition_on_weight() {
        let phi = Expr::parse("-(x^2+y^2)", &["x", "y"]).unwrap();
        let e = escobar_half_bound_check(&MetricField::disc(1.0), &phi, 0.5, Resolution::square(16), 1e-6).unwrap_err();
        assert!(matches!(e, ComparisonError::Precondition(ref p) if p.name == "weight convex"));
    }
}
