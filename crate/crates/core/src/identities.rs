//! Quadrature checks of the weighted Reilly formula, its classical special
//! cases, and the weighted Pohozaev identity for harmonic functions.
//!
//! Every integral is a composite Gauss-Legendre sum over the patch, and the
//! two sides are reported term by term so that a mismatch can be traced to
//! a single contribution.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::expr::{EvalError, Expr, Jet2};
use crate::fem::{element_gradient, Grid2D, HarmonicField};
use crate::geom::{christoffels_from, GeomError, MetricField, MetricKind};
use crate::math::{gauss_on, Sum};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum IdentityError {
    #[error("{source} at {point:?}")]
    Eval { source: EvalError, point: [f64; 3] },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("precondition failed: {0}")]
    Precondition(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("u is not harmonic: |Lu| reaches {max}")]
    NotHarmonic { max: f64 },
}

/// Where the fields live.
#[derive(Clone, Debug, PartialEq)]
pub enum Patch {
    /// Planar star-shaped domain given by a pullback metric; fields over `(x, y)`.
    Planar(MetricField),
    /// Euclidean ball in three dimensions; fields over `(x, y, z)`.
    Ball3 { radius: f64 },
    /// Warped surface patch; fields over the chart `(t, theta)`.
    Warped(MetricField),
}

impl Patch {
    /// Dimension `n` entering the formulas.
    pub fn dim(&self) -> usize {
        match self {
            Patch::Ball3 { .. } => 3,
            _ => 2,
        }
    }

    fn validate(&self) -> Result<(), IdentityError> {
        match self {
            Patch::Planar(m) => {
                if m.is_warped() {
                    return Err(IdentityError::InvalidInput("planar patch needs a pullback metric"));
                }
                if m.weight().is_some() {
                    return Err(IdentityError::InvalidInput("pass the weight through the bundle"));
                }
            }
            Patch::Warped(m) => {
                if !m.is_warped() {
                    return Err(IdentityError::InvalidInput("warped patch needs a warped metric"));
                }
                if m.weight().is_some() {
                    return Err(IdentityError::InvalidInput("pass the weight through the bundle"));
                }
            }
            Patch::Ball3 { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(IdentityError::InvalidInput("ball radius must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Inputs of the Reilly formula.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldBundle {
    pub f: Expr,
    pub v: Expr,
    pub phi: Expr,
    pub k: f64,
    pub patch: Patch,
}

impl FieldBundle {
    fn validate(&self) -> Result<(), IdentityError> {
        self.patch.validate()?;
        let d = self.patch.dim();
        if self.f.dim() != d || self.v.dim() != d || self.phi.dim() != d {
            return Err(IdentityError::InvalidInput("expressions must use the patch coordinates"));
        }
        if !self.k.is_finite() {
            return Err(IdentityError::InvalidInput("K must be finite"));
        }
        Ok(())
    }
}

/// Composite Gauss-Legendre rule: `order` points per panel, `refinement`
/// panels radially and proportionally more around. `hole` removes a
/// neighbourhood of the centre of that radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub order: usize,
    pub refinement: usize,
    pub hole: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { order: 8, refinement: 1, hole: 0.0 }
    }
}

impl Quadrature {
    pub fn new(order: usize) -> Self {
        Self { order, ..Self::default() }
    }

    fn rule(&self, panels: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(panels * self.order);
        let mut w = Vec::with_capacity(panels * self.order);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let (px, pw) = gauss_on(self.order, a + p as f64 * h, a + (p + 1) as f64 * h);
            x.extend(px);
            w.extend(pw);
        }
        (x, w)
    }

    fn validate(&self) -> Result<(), IdentityError> {
        if self.order < 1 || self.refinement < 1 {
            return Err(IdentityError::InvalidInput("quadrature order and refinement must be positive"));
        }
        if !(self.hole >= 0.0) {
            return Err(IdentityError::InvalidInput("hole radius must be non-negative"));
        }
        Ok(())
    }
}

type M3 = [[f64; 3]; 3];

// Metric data in the coordinates the fields are written in.
#[derive(Clone, Copy, Debug)]
struct Geo {
    dim: usize,
    g: M3,
    ginv: M3,
    gamma: [M3; 3],
    ric: M3,
}

impl Geo {
    fn flat(dim: usize) -> Self {
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        Self { dim, g, ginv: g, gamma: [[[0.0; 3]; 3]; 3], ric: [[0.0; 3]; 3] }
    }

    fn dot(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.ginv[i][j] * a[i] * b[j];
            }
        }
        s
    }

    fn raise(&self, a: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.ginv[i][j] * a[j];
            }
        }
        out
    }

    /// Covariant Hessian from a jet.
    fn hessian(&self, j: &Jet2) -> M3 {
        let mut h = [[0.0; 3]; 3];
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut v = j.hess(a, b);
                for c in 0..self.dim {
                    v -= self.gamma[c][a][b] * j.grad[c];
                }
                h[a][b] = v;
            }
        }
        h
    }

    fn trace(&self, h: &M3) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += self.ginv[a][b] * h[a][b];
            }
        }
        s
    }

    /// `T(X, X)` for a covector `x` raised with the metric.
    fn form(&self, t: &M3, x: &[f64; 3]) -> f64 {
        let up = self.raise(x);
        let mut s = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += t[a][b] * up[a] * up[b];
            }
        }
        s
    }

    /// Full contraction `|T|^2`.
    fn norm2(&self, t: &M3) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        s += self.ginv[a][c] * self.ginv[b][e] * t[a][b] * t[c][e];
                    }
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
struct InteriorSample {
    x: [f64; 3],
    geo: Geo,
    w: f64,
}

#[derive(Clone, Copy, Debug)]
struct BoundarySample {
    x: [f64; 3],
    geo: Geo,
    /// Outward unit normal, vector components.
    eta: [f64; 3],
    /// Sum of principal curvatures, `(n-1) H`.
    tr_s: f64,
    /// The boundary is umbilic in every supported patch: `II = ii * metric`.
    ii: f64,
    w: f64,
}

fn geo_warped(m: &MetricField, u: f64, th: f64) -> Result<Geo, IdentityError> {
    let (pm, dg) = m.metric_jet(u, th)?;
    let gam = christoffels_from(&pm.ginv, &dg);
    let mut geo = Geo::flat(2);
    let kg = m.gauss_curvature(u, th)?;
    for a in 0..2 {
        for b in 0..2 {
            geo.g[a][b] = pm.g[a][b];
            geo.ginv[a][b] = pm.ginv[a][b];
            geo.ric[a][b] = kg * pm.g[a][b];
            for c in 0..2 {
                geo.gamma[a][b][c] = gam[a][b][c];
            }
        }
    }
    Ok(geo)
}

fn interior_samples(patch: &Patch, q: &Quadrature) -> Result<Vec<InteriorSample>, IdentityError> {
    let n_r = q.refinement;
    let n_th = 8 * q.refinement;
    let mut out = Vec::new();
    match patch {
        Patch::Planar(m) => {
            let MetricKind::Pullback { radius } = m.kind() else { unreachable!() };
            let (sx, sw) = q.rule(n_r, q.hole, 1.0);
            let (tx, tw) = q.rule(n_th, 0.0, 2.0 * PI);
            for (th, wt) in tx.iter().zip(&tw) {
                let r = radius.eval(&[*th]).map_err(|e| IdentityError::Eval { source: e, point: [*th, 0.0, 0.0] })?;
                let (s_, c_) = th.sin_cos();
                for (s, ws) in sx.iter().zip(&sw) {
                    out.push(InteriorSample {
                        x: [s * r * c_, s * r * s_, 0.0],
                        geo: Geo::flat(2),
                        w: ws * wt * s * r * r,
                    });
                }
            }
        }
        Patch::Ball3 { radius } => {
            let (rx, rw) = q.rule(n_r, q.hole, *radius);
            let (mx, mw) = q.rule(2 * n_r, -1.0, 1.0);
            let (px, pw) = q.rule(n_th, 0.0, 2.0 * PI);
            for (p, wp) in px.iter().zip(&pw) {
                let (sp, cp) = p.sin_cos();
                for (mu, wm) in mx.iter().zip(&mw) {
                    let st = (1.0 - mu * mu).sqrt();
                    for (r, wr) in rx.iter().zip(&rw) {
                        out.push(InteriorSample {
                            x: [r * st * cp, r * st * sp, r * mu],
                            geo: Geo::flat(3),
                            w: wr * wm * wp * r * r,
                        });
                    }
                }
            }
        }
        Patch::Warped(m) => {
            let (sx, sw) = q.rule(n_r, q.hole, m.outer());
            let (tx, tw) = q.rule(n_th, 0.0, 2.0 * PI);
            let mut scratch = Vec::new();
            for (th, wt) in tx.iter().zip(&tw) {
                for (t, ws) in sx.iter().zip(&sw) {
                    let pm = m.metric_at(*t, *th, &mut scratch)?;
                    out.push(InteriorSample { x: [*t, *th, 0.0], geo: geo_warped(m, *t, *th)?, w: ws * wt * pm.sqrt_det });
                }
            }
        }
    }
    Ok(out)
}

fn boundary_samples(patch: &Patch, q: &Quadrature) -> Result<Vec<BoundarySample>, IdentityError> {
    let n_th = 8 * q.refinement;
    let mut out = Vec::new();
    match patch {
        Patch::Planar(m) => {
            let MetricKind::Pullback { radius } = m.kind() else { unreachable!() };
            let (tx, tw) = q.rule(n_th, 0.0, 2.0 * PI);
            for (th, wt) in tx.iter().zip(&tw) {
                let rj =
                    radius.eval_jet2(&[*th]).map_err(|e| IdentityError::Eval { source: e, point: [*th, 0.0, 0.0] })?;
                let (r, dr, ddr) = (rj.value, rj.grad[0], rj.hess(0, 0));
                let (s_, c_) = th.sin_cos();
                let tan = [dr * c_ - r * s_, dr * s_ + r * c_];
                let speed = (r * r + dr * dr).sqrt();
                let kappa = (r * r + 2.0 * dr * dr - r * ddr) / (speed * speed * speed);
                out.push(BoundarySample {
                    x: [r * c_, r * s_, 0.0],
                    geo: Geo::flat(2),
                    eta: [tan[1] / speed, -tan[0] / speed, 0.0],
                    tr_s: kappa,
                    ii: kappa,
                    w: wt * speed,
                });
            }
        }
        Patch::Ball3 { radius } => {
            let (mx, mw) = q.rule(2 * q.refinement, -1.0, 1.0);
            let (px, pw) = q.rule(n_th, 0.0, 2.0 * PI);
            for (p, wp) in px.iter().zip(&pw) {
                let (sp, cp) = p.sin_cos();
                for (mu, wm) in mx.iter().zip(&mw) {
                    let st = (1.0 - mu * mu).sqrt();
                    let eta = [st * cp, st * sp, *mu];
                    out.push(BoundarySample {
                        x: [radius * eta[0], radius * eta[1], radius * eta[2]],
                        geo: Geo::flat(3),
                        eta,
                        tr_s: 2.0 / radius,
                        ii: 1.0 / radius,
                        w: wm * wp * radius * radius,
                    });
                }
            }
        }
        Patch::Warped(m) => {
            let u = m.outer();
            let (tx, tw) = q.rule(n_th, 0.0, 2.0 * PI);
            for (th, wt) in tx.iter().zip(&tw) {
                let geo = geo_warped(m, u, *th)?;
                let nrm = geo.ginv[0][0].sqrt();
                let kappa = -geo.gamma[0][1][1] / nrm / geo.g[1][1];
                out.push(BoundarySample {
                    x: [u, *th, 0.0],
                    geo,
                    eta: [geo.ginv[0][0] / nrm, geo.ginv[1][0] / nrm, 0.0],
                    tr_s: kappa,
                    ii: kappa,
                    w: wt * geo.g[1][1].sqrt(),
                });
            }
        }
    }
    Ok(out)
}

fn jet(e: &Expr, x: &[f64; 3], scratch: &mut Vec<Jet2>) -> Result<Jet2, IdentityError> {
    e.eval_jet2_with(&x[..e.dim()], scratch).map_err(|source| IdentityError::Eval { source, point: *x })
}

/// Names of the Reilly terms, interior left side, interior right side, boundary.
pub const LHS_TERMS: [&str; 3] = ["V(Lf+Knf)^2", "-V|D2f+Kfg|^2", "2KVf<Df,Dphi>"];
pub const RHS_INTERIOR_TERMS: [&str; 2] = ["(n-1)(KLV+nK^2V)f^2", "(D2V-LVg-(2n-2)KVg+VRic_phi)(Df,Df)"];
pub const RHS_BOUNDARY_TERMS: [&str; 5] =
    ["2Vu Lbar z", "(n-1)V H_phi u^2", "V II(Dz,Dz)", "(2n-2)VKuz", "V_eta(|Dz|^2-(n-1)Kz^2)"];

/// Term-by-term evaluation of one form of the Reilly formula.
#[derive(Clone, Debug, PartialEq)]
pub struct ReillyReport {
    /// Which formula was evaluated.
    pub formula: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `(name, value)`; left-side terms first, then right-side terms.
    pub lhs_terms: Vec<(String, f64)>,
    pub rhs_terms: Vec<(String, f64)>,
    /// `|lhs - rhs| / (1 + |lhs| + |rhs|)`.
    pub residual: f64,
    pub quadrature: Quadrature,
    pub interior_nodes: usize,
    pub boundary_nodes: usize,
}

fn residual_of(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + lhs.abs() + rhs.abs())
}

impl ReillyReport {
    fn build(
        formula: &'static str,
        lhs_names: &[&str],
        lhs: Vec<Sum>,
        rhs_names: &[&str],
        rhs: Vec<Sum>,
        quadrature: Quadrature,
        nodes: (usize, usize),
    ) -> Self {
        let lhs_terms: Vec<(String, f64)> = lhs_names.iter().zip(&lhs).map(|(n, s)| (String::from(*n), s.value())).collect();
        let rhs_terms: Vec<(String, f64)> = rhs_names.iter().zip(&rhs).map(|(n, s)| (String::from(*n), s.value())).collect();
        let l = crate::math::sum(&lhs_terms.iter().map(|t| t.1).collect::<Vec<_>>());
        let r = crate::math::sum(&rhs_terms.iter().map(|t| t.1).collect::<Vec<_>>());
        Self {
            formula,
            lhs: l,
            rhs: r,
            lhs_terms,
            rhs_terms,
            residual: residual_of(l, r),
            quadrature,
            interior_nodes: nodes.0,
            boundary_nodes: nodes.1,
        }
    }

    /// `lhs - rhs`.
    pub fn defect(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// `1 + sum of |term|`, the scale for comparing two evaluations.
    pub fn scale(&self) -> f64 {
        1.0 + self.lhs_terms.iter().chain(&self.rhs_terms).map(|t| t.1.abs()).sum::<f64>()
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.lhs_terms.iter().chain(&self.rhs_terms).find(|t| t.0 == name).map(|t| t.1)
    }

    /// Residual obtained when the right-side term `name` enters with the
    /// opposite sign.
    pub fn residual_with_rhs_term_negated(&self, name: &str) -> Option<f64> {
        let v = self.rhs_terms.iter().find(|t| t.0 == name)?.1;
        Some(residual_of(self.lhs, self.rhs - 2.0 * v))
    }

    /// Agreement of `lhs - rhs` with another evaluation of the same
    /// integrals, relative to [`ReillyReport::scale`].
    pub fn agreement(&self, other: &ReillyReport) -> f64 {
        (self.defect() - other.defect()).abs() / self.scale().max(other.scale())
    }
}

struct Jets {
    f: Jet2,
    v: Jet2,
    p: Jet2,
}

fn eval_jets(b: &FieldBundle, x: &[f64; 3], scratch: &mut Vec<Jet2>) -> Result<Jets, IdentityError> {
    Ok(Jets { f: jet(&b.f, x, scratch)?, v: jet(&b.v, x, scratch)?, p: jet(&b.phi, x, scratch)? })
}

/// Weighted Reilly formula with potential `V` and constant `K`, all terms.
///
/// The weighted mean curvature term is `(n-1) H u^2 - phi_eta u^2`, the sign
/// that matches `L = Delta - <grad phi, grad>` and the measure `e^{-phi} dv`.
/// With the opposite sign the formula fails whenever `phi_eta u^2` has
/// non-zero boundary integral.
pub fn reilly_general_residual(b: &FieldBundle, q: &Quadrature) -> Result<ReillyReport, IdentityError> {
    b.validate()?;
    q.validate()?;
    let n = b.patch.dim() as f64;
    let k = b.k;
    let inner = interior_samples(&b.patch, q)?;
    let outer = boundary_samples(&b.patch, q)?;
    let mut lhs = alloc::vec![Sum::new(); 3];
    let mut rhs = alloc::vec![Sum::new(); 7];
    let mut scratch = Vec::new();
    for s in &inner {
        let j = eval_jets(b, &s.x, &mut scratch)?;
        let g = &s.geo;
        let (f, v) = (j.f.value, j.v.value);
        let hf = g.hessian(&j.f);
        let hv = g.hessian(&j.v);
        let hp = g.hessian(&j.p);
        let lf = g.trace(&hf) - g.dot(&j.p.grad, &j.f.grad);
        let lv = g.trace(&hv) - g.dot(&j.p.grad, &j.v.grad);
        let mut shifted = hf;
        let mut tensor = [[0.0; 3]; 3];
        for a in 0..g.dim {
            for c in 0..g.dim {
                shifted[a][c] += k * f * g.g[a][c];
                tensor[a][c] = hv[a][c] - (lv + (2.0 * n - 2.0) * k * v) * g.g[a][c] + v * (g.ric[a][c] + hp[a][c]);
            }
        }
        let w = s.w * (-j.p.value).exp();
        lhs[0].add(w * v * (lf + k * n * f) * (lf + k * n * f));
        lhs[1].add(-w * v * g.norm2(&shifted));
        lhs[2].add(w * 2.0 * k * v * f * g.dot(&j.f.grad, &j.p.grad));
        rhs[0].add(w * (n - 1.0) * (k * lv + n * k * k * v) * f * f);
        rhs[1].add(w * g.form(&tensor, &j.f.grad));
    }
    for s in &outer {
        let j = eval_jets(b, &s.x, &mut scratch)?;
        let g = &s.geo;
        let (z, v) = (j.f.value, j.v.value);
        let nf = |c: &Jet2| (0..g.dim).map(|a| c.grad[a] * s.eta[a]).sum::<f64>();
        let u = nf(&j.f);
        let phi_eta = nf(&j.p);
        let v_eta = nf(&j.v);
        let hf = g.hessian(&j.f);
        let mut h_nn = 0.0;
        for a in 0..g.dim {
            for c in 0..g.dim {
                h_nn += hf[a][c] * s.eta[a] * s.eta[c];
            }
        }
        let tang2 = g.dot(&j.f.grad, &j.f.grad) - u * u;
        let lap_bar = g.trace(&hf) - h_nn - s.tr_s * u;
        let drift = g.dot(&j.p.grad, &j.f.grad) - phi_eta * u;
        let l_bar = lap_bar - drift;
        let w = s.w * (-j.p.value).exp();
        rhs[2].add(w * v * 2.0 * u * l_bar);
        rhs[3].add(w * v * (s.tr_s - phi_eta) * u * u);
        rhs[4].add(w * v * s.ii * tang2);
        rhs[5].add(w * v * (2.0 * n - 2.0) * k * u * z);
        rhs[6].add(w * v_eta * (tang2 - (n - 1.0) * k * z * z));
    }
    let names: Vec<&str> = RHS_INTERIOR_TERMS.iter().chain(&RHS_BOUNDARY_TERMS).copied().collect();
    Ok(ReillyReport::build("general", &LHS_TERMS, lhs, &names, rhs, *q, (inner.len(), outer.len())))
}

fn require(cond: bool, what: &'static str) -> Result<(), IdentityError> {
    if cond {
        Ok(())
    } else {
        Err(IdentityError::Precondition(what))
    }
}

/// Classical Reilly formula, for `V = 1`, `K = 0`, `phi = 0`.
pub fn reilly_classical_residual(b: &FieldBundle, q: &Quadrature) -> Result<ReillyReport, IdentityError> {
    b.validate()?;
    q.validate()?;
    require(b.v.as_constant() == Some(1.0), "V must be identically 1")?;
    require(b.k == 0.0, "K must vanish")?;
    require(b.phi.as_constant() == Some(0.0), "phi must vanish")?;
    let inner = interior_samples(&b.patch, q)?;
    let outer = boundary_samples(&b.patch, q)?;
    let mut lhs = alloc::vec![Sum::new(); 3];
    let mut rhs = alloc::vec![Sum::new(); 3];
    let mut scratch = Vec::new();
    for s in &inner {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let g = &s.geo;
        let hf = g.hessian(&jf);
        let lap = g.trace(&hf);
        lhs[0].add(s.w * lap * lap);
        lhs[1].add(-s.w * g.norm2(&hf));
        lhs[2].add(-s.w * g.form(&g.ric, &jf.grad));
    }
    for s in &outer {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let g = &s.geo;
        let u: f64 = (0..g.dim).map(|a| jf.grad[a] * s.eta[a]).sum();
        let hf = g.hessian(&jf);
        let mut h_nn = 0.0;
        for a in 0..g.dim {
            for c in 0..g.dim {
                h_nn += hf[a][c] * s.eta[a] * s.eta[c];
            }
        }
        let lap_bar = g.trace(&hf) - h_nn - s.tr_s * u;
        let tang2 = g.dot(&jf.grad, &jf.grad) - u * u;
        rhs[0].add(s.w * s.tr_s * u * u);
        rhs[1].add(s.w * 2.0 * u * lap_bar);
        rhs[2].add(s.w * s.ii * tang2);
    }
    Ok(ReillyReport::build(
        "classical",
        &["(Df)^2", "-|D2f|^2", "-Ric(Df,Df)"],
        lhs,
        &["(n-1)H u^2", "2u Dbar z", "II(Dz,Dz)"],
        rhs,
        *q,
        (inner.len(), outer.len()),
    ))
}

/// Unweighted formula with potential `V` and constant `K` (`phi = 0`).
pub fn qiu_xia_residual(b: &FieldBundle, q: &Quadrature) -> Result<ReillyReport, IdentityError> {
    b.validate()?;
    q.validate()?;
    require(b.phi.as_constant() == Some(0.0), "phi must vanish")?;
    let n = b.patch.dim() as f64;
    let k = b.k;
    let inner = interior_samples(&b.patch, q)?;
    let outer = boundary_samples(&b.patch, q)?;
    let mut lhs = alloc::vec![Sum::new(); 2];
    let mut rhs = alloc::vec![Sum::new(); 7];
    let mut scratch = Vec::new();
    for s in &inner {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let jv = jet(&b.v, &s.x, &mut scratch)?;
        let g = &s.geo;
        let (f, v) = (jf.value, jv.value);
        let hf = g.hessian(&jf);
        let hv = g.hessian(&jv);
        let lap_f = g.trace(&hf);
        let lap_v = g.trace(&hv);
        let mut shifted = hf;
        let mut tensor = [[0.0; 3]; 3];
        for a in 0..g.dim {
            for c in 0..g.dim {
                shifted[a][c] += k * f * g.g[a][c];
                tensor[a][c] = hv[a][c] - lap_v * g.g[a][c] - (2.0 * n - 2.0) * k * v * g.g[a][c] + v * g.ric[a][c];
            }
        }
        lhs[0].add(s.w * v * (lap_f + k * n * f) * (lap_f + k * n * f));
        lhs[1].add(-s.w * v * g.norm2(&shifted));
        rhs[0].add(s.w * (n - 1.0) * (k * lap_v + n * k * k * v) * f * f);
        rhs[1].add(s.w * g.form(&tensor, &jf.grad));
    }
    for s in &outer {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let jv = jet(&b.v, &s.x, &mut scratch)?;
        let g = &s.geo;
        let (z, v) = (jf.value, jv.value);
        let u: f64 = (0..g.dim).map(|a| jf.grad[a] * s.eta[a]).sum();
        let v_eta: f64 = (0..g.dim).map(|a| jv.grad[a] * s.eta[a]).sum();
        let hf = g.hessian(&jf);
        let mut h_nn = 0.0;
        for a in 0..g.dim {
            for c in 0..g.dim {
                h_nn += hf[a][c] * s.eta[a] * s.eta[c];
            }
        }
        let lap_bar = g.trace(&hf) - h_nn - s.tr_s * u;
        let tang2 = g.dot(&jf.grad, &jf.grad) - u * u;
        rhs[2].add(s.w * v * 2.0 * u * lap_bar);
        rhs[3].add(s.w * v * s.tr_s * u * u);
        rhs[4].add(s.w * v * s.ii * tang2);
        rhs[5].add(s.w * v * (2.0 * n - 2.0) * k * u * z);
        rhs[6].add(s.w * v_eta * (tang2 - (n - 1.0) * k * z * z));
    }
    Ok(ReillyReport::build(
        "qiu-xia",
        &["V(Df+Knf)^2", "-V|D2f+Kfg|^2"],
        lhs,
        &[
            "(n-1)(KDV+nK^2V)f^2",
            "(D2V-DVg-(2n-2)KVg+VRic)(Df,Df)",
            "2Vu Dbar z",
            "(n-1)V H u^2",
            "V II(Dz,Dz)",
            "(2n-2)VKuz",
            "V_eta(|Dz|^2-(n-1)Kz^2)",
        ],
        rhs,
        *q,
        (inner.len(), outer.len()),
    ))
}

/// Weighted formula without potential (`V = 1`, `K = 0`).
pub fn ma_du_residual(b: &FieldBundle, q: &Quadrature) -> Result<ReillyReport, IdentityError> {
    b.validate()?;
    q.validate()?;
    require(b.v.as_constant() == Some(1.0), "V must be identically 1")?;
    require(b.k == 0.0, "K must vanish")?;
    let inner = interior_samples(&b.patch, q)?;
    let outer = boundary_samples(&b.patch, q)?;
    let mut lhs = alloc::vec![Sum::new(); 3];
    let mut rhs = alloc::vec![Sum::new(); 3];
    let mut scratch = Vec::new();
    for s in &inner {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let jp = jet(&b.phi, &s.x, &mut scratch)?;
        let g = &s.geo;
        let hf = g.hessian(&jf);
        let hp = g.hessian(&jp);
        let lf = g.trace(&hf) - g.dot(&jp.grad, &jf.grad);
        let mut ric_phi = g.ric;
        for a in 0..g.dim {
            for c in 0..g.dim {
                ric_phi[a][c] += hp[a][c];
            }
        }
        let w = s.w * (-jp.value).exp();
        lhs[0].add(w * lf * lf);
        lhs[1].add(-w * g.norm2(&hf));
        lhs[2].add(-w * g.form(&ric_phi, &jf.grad));
    }
    for s in &outer {
        let jf = jet(&b.f, &s.x, &mut scratch)?;
        let jp = jet(&b.phi, &s.x, &mut scratch)?;
        let g = &s.geo;
        let u: f64 = (0..g.dim).map(|a| jf.grad[a] * s.eta[a]).sum();
        let phi_eta: f64 = (0..g.dim).map(|a| jp.grad[a] * s.eta[a]).sum();
        let hf = g.hessian(&jf);
        let mut h_nn = 0.0;
        for a in 0..g.dim {
            for c in 0..g.dim {
                h_nn += hf[a][c] * s.eta[a] * s.eta[c];
            }
        }
        let l_bar = g.trace(&hf) - h_nn - s.tr_s * u - (g.dot(&jp.grad, &jf.grad) - phi_eta * u);
        let tang2 = g.dot(&jf.grad, &jf.grad) - u * u;
        let w = s.w * (-jp.value).exp();
        rhs[0].add(w * (s.tr_s - phi_eta) * u * u);
        rhs[1].add(w * 2.0 * u * l_bar);
        rhs[2].add(w * s.ii * tang2);
    }
    Ok(ReillyReport::build(
        "ma-du",
        &["(Lf)^2", "-|D2f|^2", "-Ric_phi(Df,Df)"],
        lhs,
        &["(n-1)H_phi u^2", "2u Lbar z", "II(Dz,Dz)"],
        rhs,
        *q,
        (inner.len(), outer.len()),
    ))
}

/// Both sides of the weighted Pohozaev identity
/// `int_bd (u_eta g(F, grad u) - |grad u|^2 g(F, eta) / 2) dA_phi
///  = int (g(grad_{grad u} F, grad u) - |grad u|^2 div_phi F / 2) dv_phi`
/// for `L u = 0`, with `div_phi F = div F - g(F, grad phi)`.
///
/// This is the divergence theorem for
/// `g(F, grad u) grad u - |grad u|^2 F / 2` in the weighted measure. Written
/// with the interior integrand negated, the identity holds only when both
/// sides vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct PohozaevReport {
    pub boundary: f64,
    pub interior: f64,
    /// Contribution of the inner truncation circle to `boundary` (discrete
    /// fields only).
    pub inner_rim: f64,
    /// `|boundary - interior| / (1 + |boundary| + |interior|)`.
    pub residual: f64,
    /// Largest `|L u|` seen at the interior nodes (analytic fields only).
    pub harmonic_defect: f64,
}

impl PohozaevReport {
    fn new(boundary: f64, interior: f64, inner_rim: f64, harmonic_defect: f64) -> Self {
        Self { boundary, interior, inner_rim, residual: residual_of(boundary, interior), harmonic_defect }
    }
}

/// Vector field components in the patch coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField(pub Vec<Expr>);

impl VectorField {
    /// `(x, y)` or `(x, y, z)`.
    pub fn position(dim: usize) -> Self {
        let names: &[&str] = if dim == 3 { &["x", "y", "z"] } else { &["x", "y"] };
        Self(names.iter().map(|n| Expr::parse(n, names).expect("literal parses")).collect())
    }
}

// Covariant derivative data of F at a point: components and D_b F^a.
fn field_jets(fv: &VectorField, x: &[f64; 3], scratch: &mut Vec<Jet2>) -> Result<[Jet2; 3], IdentityError> {
    let mut out = [Jet2::constant(fv.0.len(), 0.0); 3];
    for (i, e) in fv.0.iter().enumerate() {
        out[i] = jet(e, x, scratch)?;
    }
    Ok(out)
}

// (div_phi F, g(grad_X F, X)) for the covector du, and |du|^2.
fn pohozaev_density(g: &Geo, fj: &[Jet2; 3], du: &[f64; 3], dphi: &[f64; 3]) -> (f64, f64, f64) {
    let d = g.dim;
    let x = g.raise(du);
    let mut div = 0.0;
    for a in 0..d {
        div += fj[a].grad[a];
        for b in 0..d {
            div += g.gamma[a][a][b] * fj[b].value;
        }
    }
    let mut f_dphi = 0.0;
    for a in 0..d {
        f_dphi += fj[a].value * dphi[a];
    }
    let mut nab = 0.0;
    for a in 0..d {
        let mut cov = 0.0;
        for b in 0..d {
            let mut dbf = fj[a].grad[b];
            for c in 0..d {
                dbf += g.gamma[a][b][c] * fj[c].value;
            }
            cov += x[b] * dbf;
        }
        nab += du[a] * cov;
    }
    let grad2 = g.dot(du, du);
    (div - f_dphi, nab, grad2)
}

fn validate_pohozaev(patch: &Patch, phi: &Expr, fv: &VectorField) -> Result<(), IdentityError> {
    patch.validate()?;
    let d = patch.dim();
    if phi.dim() != d || fv.0.len() != d || fv.0.iter().any(|e| e.dim() != d) {
        return Err(IdentityError::InvalidInput("expressions must use the patch coordinates"));
    }
    Ok(())
}

/// Pohozaev identity for an analytic `u` with `L u = 0`. Fails with
/// [`IdentityError::NotHarmonic`] when `|L u|` exceeds `1e-8 (1 + |grad u|^2)`.
pub fn pohozaev_residual(
    patch: &Patch,
    phi: &Expr,
    u: &Expr,
    field: &VectorField,
    q: &Quadrature,
) -> Result<PohozaevReport, IdentityError> {
    validate_pohozaev(patch, phi, field)?;
    q.validate()?;
    if u.dim() != patch.dim() {
        return Err(IdentityError::InvalidInput("u must use the patch coordinates"));
    }
    let mut scratch = Vec::new();
    let mut interior = Sum::new();
    let mut defect: f64 = 0.0;
    let mut violated = false;
    for s in interior_samples(patch, q)? {
        let ju = jet(u, &s.x, &mut scratch)?;
        let jp = jet(phi, &s.x, &mut scratch)?;
        let fj = field_jets(field, &s.x, &mut scratch)?;
        let g = &s.geo;
        let lu = g.trace(&g.hessian(&ju)) - g.dot(&jp.grad, &ju.grad);
        defect = defect.max(lu.abs());
        if lu.abs() > 1e-8 * (1.0 + g.dot(&ju.grad, &ju.grad)) {
            violated = true;
        }
        let (div_phi, nab, grad2) = pohozaev_density(g, &fj, &ju.grad, &jp.grad);
        interior.add(s.w * (-jp.value).exp() * (nab - 0.5 * grad2 * div_phi));
    }
    if violated {
        return Err(IdentityError::NotHarmonic { max: defect });
    }
    let mut boundary = Sum::new();
    for s in boundary_samples(patch, q)? {
        let ju = jet(u, &s.x, &mut scratch)?;
        let jp = jet(phi, &s.x, &mut scratch)?;
        let fj = field_jets(field, &s.x, &mut scratch)?;
        let g = &s.geo;
        let d = g.dim;
        let u_eta: f64 = (0..d).map(|a| ju.grad[a] * s.eta[a]).sum();
        let f_du: f64 = (0..d).map(|a| fj[a].value * ju.grad[a]).sum();
        let mut f_eta = 0.0;
        for a in 0..d {
            for c in 0..d {
                f_eta += g.g[a][c] * fj[a].value * s.eta[c];
            }
        }
        let grad2 = g.dot(&ju.grad, &ju.grad);
        boundary.add(s.w * (-jp.value).exp() * (u_eta * f_du - 0.5 * grad2 * f_eta));
    }
    Ok(PohozaevReport::new(boundary.value(), interior.value(), 0.0, defect))
}

// Chart covector of u turned into the field coordinates of the metric.
struct ChartFrame {
    geo: Geo,
    // jac[i][a] = d x_i / d u_a (identity for warped charts)
    jac: [[f64; 2]; 2],
    sqrt_det: f64,
    point: [f64; 3],
}

fn chart_frame(m: &MetricField, u: f64, th: f64, scratch: &mut Vec<f64>) -> Result<ChartFrame, IdentityError> {
    if m.is_warped() {
        let pm = m.metric_at(u, th, scratch)?;
        Ok(ChartFrame {
            geo: geo_warped(m, u, th)?,
            jac: [[1.0, 0.0], [0.0, 1.0]],
            sqrt_det: pm.sqrt_det,
            point: [u, th, 0.0],
        })
    } else {
        let jac = m.field_jacobian(u, th)?;
        let p = m.field_point(u, th, scratch)?;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        Ok(ChartFrame { geo: Geo::flat(2), jac, sqrt_det: det.abs(), point: [p[0], p[1], 0.0] })
    }
}

impl ChartFrame {
    // Field-coordinate covector from chart covector: du_chart = J^T du_field.
    fn covector(&self, d: [f64; 2]) -> [f64; 3] {
        let j = &self.jac;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // Solve J^T w = d.
        let w0 = (j[1][1] * d[0] - j[1][0] * d[1]) / det;
        let w1 = (-j[0][1] * d[0] + j[0][0] * d[1]) / det;
        [w0, w1, 0.0]
    }

    // Field-coordinate vector from chart vector components.
    fn vector(&self, v: [f64; 2]) -> [f64; 3] {
        let j = &self.jac;
        [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1], 0.0]
    }
}

/// Pohozaev identity for a discrete harmonic field from
/// [`crate::fem::harmonic_extension`] on `grid` over `m` (whose weight is
/// `phi`). `field` is written in the weight's coordinates. The outer normal
/// derivative is the discrete flux; on the inner truncation circle the
/// natural condition gives `u_eta = 0`.
pub fn pohozaev_discrete(
    m: &MetricField,
    grid: &Grid2D,
    u: &HarmonicField,
    field: &VectorField,
    gauss: usize,
) -> Result<PohozaevReport, IdentityError> {
    if field.0.len() != 2 || field.0.iter().any(|e| e.dim() != 2) {
        return Err(IdentityError::InvalidInput("vector field must have two components in two variables"));
    }
    if u.values.len() != grid.n_nodes() || u.flux.len() != grid.n_theta() {
        return Err(IdentityError::InvalidInput("field does not match the grid"));
    }
    if !(u.residual <= 1e-8) {
        return Err(IdentityError::NotHarmonic { max: u.residual });
    }
    let zero = Expr::constant(0.0, &["a", "b"]);
    let phi = m.weight().unwrap_or(&zero);
    let (gp, gw) = gauss_on(gauss.max(1), 0.0, 1.0);
    let (nt, nth) = (grid.n_t(), grid.n_theta());
    let (hu, hth) = (grid.h_t(), grid.h_theta());
    let mut sf = Vec::new();
    let mut sj = Vec::new();
    let mut interior = Sum::new();
    for i in 0..nt {
        for j in 0..nth {
            for (xa, wa) in gp.iter().zip(&gw) {
                let t = grid.t(i) + hu * xa;
                for (xb, wb) in gp.iter().zip(&gw) {
                    let th = grid.theta(j) + hth * xb;
                    let fr = chart_frame(m, t, th, &mut sf)?;
                    let (_, d) = element_gradient(grid, &u.values, i, j, *xa, *xb);
                    let du = fr.covector(d);
                    let jp = jet(phi, &fr.point, &mut sj)?;
                    let fj = field_jets(field, &fr.point, &mut sj)?;
                    let (div_phi, nab, grad2) = pohozaev_density(&fr.geo, &fj, &du, &jp.grad);
                    let w = wa * wb * hu * hth * fr.sqrt_det * (-jp.value).exp();
                    interior.add(w * (nab - 0.5 * grad2 * div_phi));
                }
            }
        }
    }
    let mut boundary = Sum::new();
    let mut inner = Sum::new();
    let rim = grid.n_interior();
    for j in 0..nth {
        let jn = (j + 1) % nth;
        let d_th = (u.values[rim + jn] - u.values[rim + j]) / hth;
        for (xb, wb) in gp.iter().zip(&gw) {
            let th = grid.theta(j) + hth * xb;
            // Outer rim.
            let fr = chart_frame(m, grid.outer(), th, &mut sf)?;
            let pm = m.metric_at(grid.outer(), th, &mut sf)?;
            let nrm = pm.ginv[0][0].sqrt();
            let eta_chart = [pm.ginv[0][0] / nrm, pm.ginv[1][0] / nrm];
            let u_eta = (1.0 - xb) * u.flux[j] + xb * u.flux[jn];
            // eta^a du_a = u_eta fixes the radial chart component.
            let d0 = (u_eta - eta_chart[1] * d_th) / eta_chart[0];
            let du = fr.covector([d0, d_th]);
            let eta = fr.vector(eta_chart);
            let jp = jet(phi, &fr.point, &mut sj)?;
            let fj = field_jets(field, &fr.point, &mut sj)?;
            let g = &fr.geo;
            let f_du = fj[0].value * du[0] + fj[1].value * du[1];
            let mut f_eta = 0.0;
            for a in 0..2 {
                for c in 0..2 {
                    f_eta += g.g[a][c] * fj[a].value * eta[c];
                }
            }
            let da = wb * hth * pm.g[1][1].sqrt() * (-jp.value).exp();
            boundary.add(da * (u_eta * f_du - 0.5 * g.dot(&du, &du) * f_eta));
            // Inner circle, outward normal pointing to the pole.
            let t0 = grid.t0();
            let fr = chart_frame(m, t0, th, &mut sf)?;
            let pm = m.metric_at(t0, th, &mut sf)?;
            let nrm = pm.ginv[0][0].sqrt();
            let eta = fr.vector([-pm.ginv[0][0] / nrm, -pm.ginv[1][0] / nrm]);
            let (_, d) = element_gradient(grid, &u.values, 0, j, 0.0, *xb);
            let du = fr.covector(d);
            let jp = jet(phi, &fr.point, &mut sj)?;
            let fj = field_jets(field, &fr.point, &mut sj)?;
            let g = &fr.geo;
            let mut f_eta = 0.0;
            for a in 0..2 {
                for c in 0..2 {
                    f_eta += g.g[a][c] * fj[a].value * eta[c];
                }
            }
            let da = wb * hth * pm.g[1][1].sqrt() * (-jp.value).exp();
            inner.add(-da * 0.5 * g.dot(&du, &du) * f_eta);
        }
    }
    let inner_rim = inner.value();
    Ok(PohozaevReport::new(boundary.value() + inner_rim, interior.value(), inner_rim, 0.0))
}
