//! The warping function of a rotationally symmetric model space:
//! `f'' + k(t) f = 0`, `f(0) = 0`, `f'(0) = 1`, together with the first
//! positive zero `l_pos` of `f`.

use alloc::vec::Vec;

use crate::expr::Expr;
use crate::math::{interval, quintic_hermite};
use crate::ode::{self, Flow, OdeError, Tolerance};
use crate::spline::{CubicSpline, SplineError};

/// Default cap on the integration range.
pub const DEFAULT_T_MAX: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WarpError {
    #[error("curvature profile is not finite at t = {t}")]
    NonFiniteCurvature { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("tabulated profile covers [{lo}, {hi}] but [0, {t_max}] is needed")]
    TableRange { lo: f64, hi: f64, t_max: f64 },
    #[error("bad curvature table: {0}")]
    Table(#[from] SplineError),
    #[error("t = {t} outside the positivity interval [0, {limit})")]
    OutOfRange { t: f64, limit: f64 },
}

impl From<OdeError> for WarpError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::NonFinite { t } => WarpError::NonFiniteCurvature { t },
            OdeError::StepUnderflow { t } => WarpError::StepUnderflow { t },
        }
    }
}

/// Radial curvature bound `k(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CurvatureProfile {
    Constant(f64),
    /// Expression in the single variable `t`.
    Expression(Expr),
    /// Natural cubic spline through `(t_i, k_i)`.
    Table(CubicSpline),
}

impl CurvatureProfile {
    pub fn table(t: &[f64], k: &[f64]) -> Result<Self, WarpError> {
        Ok(CurvatureProfile::Table(CubicSpline::natural(t, k)?))
    }

    pub fn expression(e: Expr) -> Result<Self, WarpError> {
        if e.variables().len() != 1 {
            return Err(WarpError::InvalidInput("curvature expression must have one variable"));
        }
        Ok(CurvatureProfile::Expression(e))
    }

    /// `k(t)`; `None` where it is undefined or not finite.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let v = match self {
            CurvatureProfile::Constant(c) => *c,
            CurvatureProfile::Expression(e) => e.eval(&[t]).ok()?,
            CurvatureProfile::Table(s) => s.eval(t).0,
        };
        v.is_finite().then_some(v)
    }

    /// `k(0)`, used by series starts near the pole.
    pub fn at_pole(&self) -> Option<f64> {
        self.eval(0.0)
    }

    /// Constant value when the profile is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CurvatureProfile::Constant(c) => Some(*c),
            CurvatureProfile::Expression(e) => e.as_constant(),
            CurvatureProfile::Table(_) => None,
        }
    }
}

/// Sampled warping function.
#[derive(Clone, Debug)]
pub struct WarpingSolution {
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    f_second: Vec<f64>,
    /// First zero of `f` in `(0, t_max]`, `None` when `f > 0` throughout.
    pub l_pos: Option<f64>,
    pub t_max: f64,
    pub n_dim: usize,
    pub tol: f64,
    profile: CurvatureProfile,
}

/// Integrates the warping equation on `[0, t_max]`, stopping at the first
/// zero of `f`.
pub fn solve_warping(k: CurvatureProfile, t_max: f64, tol: f64) -> Result<WarpingSolution, WarpError> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(WarpError::InvalidInput("t_max must be positive and finite"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(WarpError::InvalidInput("tol must be positive"));
    }
    if let CurvatureProfile::Table(s) = &k {
        let (lo, hi) = s.domain();
        if lo > 0.0 || hi < t_max {
            return Err(WarpError::TableRange { lo, hi, t_max });
        }
    }
    let rtol = (tol * 1e-3).max(1e-14);
    let tolerance = Tolerance {
        rtol,
        atol: [rtol * t_max.max(1.0), rtol],
        h_max: (t_max / 64.0).min(0.05),
        h_init: (t_max * 1e-4).min(1e-3),
    };
    let rhs = |t: f64, y: &[f64; 2]| match k.eval(t) {
        Some(kt) => [y[1], -kt * y[0]],
        None => [f64::NAN, f64::NAN],
    };

    let mut grid = Vec::new();
    let mut f = Vec::new();
    let mut fp = Vec::new();
    let mut fpp = Vec::new();
    let mut crossing: Option<(f64, [f64; 2], [f64; 2], f64)> = None;
    let mut zero_at_node = false;
    ode::integrate(rhs, 0.0, [0.0, 1.0], t_max, &tolerance, |t, y, dy| {
        if t > 0.0 && y[0] <= 0.0 {
            let last = grid.len() - 1;
            if y[0] == 0.0 {
                zero_at_node = true;
                grid.push(t);
                f.push(0.0);
                fp.push(y[1]);
                fpp.push(dy[1]);
            } else {
                crossing = Some((grid[last], [f[last], fp[last]], [fp[last], fpp[last]], t));
            }
            return Flow::Stop;
        }
        grid.push(t);
        f.push(y[0]);
        fp.push(y[1]);
        fpp.push(dy[1]);
        Flow::Continue
    })?;

    let mut l_pos = None;
    if zero_at_node {
        l_pos = grid.last().copied();
    } else if let Some((ta, ya, ka, tb)) = crossing {
        // Bisect on the step length from the last positive node.
        let mut rhs = rhs;
        let mut lo = 0.0;
        let mut hi = tb - ta;
        let mut y_hi = ode::step(&mut rhs, ta, &ya, &ka, hi)?.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (ym, _, _) = ode::step(&mut rhs, ta, &ya, &ka, mid)?;
            if ym[0] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
                y_hi = ym;
            }
        }
        let l = ta + hi;
        let kl = k.eval(l).ok_or(WarpError::NonFiniteCurvature { t: l })?;
        grid.push(l);
        f.push(0.0);
        fp.push(y_hi[1]);
        fpp.push(-kl * 0.0);
        l_pos = Some(l);
    }

    Ok(WarpingSolution { grid, f, f_prime: fp, f_second: fpp, l_pos, t_max, n_dim: 2, tol, profile: k })
}

impl WarpingSolution {
    /// Same solution, tagged with a different ambient dimension.
    pub fn with_dim(mut self, n: usize) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        self.n_dim = n;
        self
    }

    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    /// Right end of the interval where `warp_at` is defined: `l_pos` when
    /// finite (exclusive), otherwise `t_max` (inclusive).
    pub fn limit(&self) -> f64 {
        self.l_pos.unwrap_or(self.t_max)
    }

    /// `f'(l_pos)` when `l_pos` is finite.
    pub fn slope_at_zero(&self) -> Option<f64> {
        self.l_pos.map(|_| *self.f_prime.last().expect("non-empty"))
    }

    fn locate(&self, t: f64) -> Result<usize, WarpError> {
        let ok = match self.l_pos {
            Some(l) => t >= 0.0 && t < l,
            None => t >= 0.0 && t <= self.t_max,
        };
        if !ok {
            return Err(WarpError::OutOfRange { t, limit: self.limit() });
        }
        Ok(interval(&self.grid, t))
    }

    /// `(f(t), f'(t))` by quintic Hermite interpolation of the nodes.
    pub fn warp_at(&self, t: f64) -> Result<(f64, f64), WarpError> {
        let i = self.locate(t)?;
        let (v, d, _) = self.hermite(i, t);
        Ok((v, d))
    }

    /// `(f, f', f'')` at `t`.
    pub fn warp_jet(&self, t: f64) -> Result<(f64, f64, f64), WarpError> {
        let i = self.locate(t)?;
        Ok(self.hermite(i, t))
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let h = self.grid[i + 1] - self.grid[i];
        quintic_hermite(
            h,
            (t - self.grid[i]) / h,
            (self.f[i], self.f_prime[i], self.f_second[i]),
            (self.f[i + 1], self.f_prime[i + 1], self.f_second[i + 1]),
        )
    }

    /// Largest `|f'' + k f|` of the interpolant at interval midpoints,
    /// relative to `1 + |k f|`.
    pub fn midpoint_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() - 1 {
            let t = 0.5 * (self.grid[i] + self.grid[i + 1]);
            let (v, _, dd) = self.hermite(i, t);
            if let Some(k) = self.profile.eval(t) {
                worst = worst.max((dd + k * v).abs() / (1.0 + (k * v).abs()));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn euclidean_profile() {
        let s = solve_warping(CurvatureProfile::Constant(0.0), 2.0, 1e-10).unwrap();
        assert_eq!(s.l_pos, None);
        let (f, fp) = s.warp_at(0.5).unwrap();
        assert!((f - 0.5).abs() < 1e-12 && (fp - 1.0).abs() < 1e-12);
        assert_eq!(s.f[0], 0.0);
        assert_eq!(s.f_prime[0], 1.0);
        assert!(s.warp_at(2.0).is_ok());
        assert!(s.warp_at(2.0001).is_err());
    }

    #[test]
    fn spherical_profile() {
        let s = solve_warping(CurvatureProfile::Constant(1.0), 4.0, 1e-10).unwrap();
        let l = s.l_pos.unwrap();
        assert!((l - PI).abs() < 1e-8, "l_pos = {l}");
        assert!(s.slope_at_zero().unwrap() < 0.0);
        let (f, fp) = s.warp_at(PI / 2.0).unwrap();
        assert!((f - 1.0).abs() < 1e-9 && fp.abs() < 1e-9);
        for k in 0..300 {
            let t = 3.1 * k as f64 / 300.0;
            let (f, fp) = s.warp_at(t).unwrap();
            assert!((f - t.sin()).abs() < 1e-8);
            assert!((fp - t.cos()).abs() < 1e-8);
        }
        assert!(s.warp_at(l).is_err());
    }

    #[test]
    fn hyperbolic_profile() {
        let s = solve_warping(CurvatureProfile::Constant(-1.0), 2.0, 1e-10).unwrap();
        assert_eq!(s.l_pos, None);
        for k in 0..=200 {
            let t = 2.0 * k as f64 / 200.0;
            let (f, fp) = s.warp_at(t).unwrap();
            assert!((f - t.sinh()).abs() < 1e-8 * t.cosh());
            assert!((fp - t.cosh()).abs() < 1e-8 * t.cosh());
        }
    }

    #[test]
    fn nodes_are_exact_and_residual_small() {
        let s = solve_warping(CurvatureProfile::Constant(1.0), 3.0, 1e-10).unwrap();
        for i in 0..s.grid.len() {
            assert_eq!(s.warp_at(s.grid[i]).unwrap().0, s.f[i]);
        }
        assert!(s.midpoint_residual() < 1e-7, "{}", s.midpoint_residual());
    }

    #[test]
    fn bad_inputs() {
        assert!(solve_warping(CurvatureProfile::Constant(0.0), -1.0, 1e-8).is_err());
        assert!(solve_warping(CurvatureProfile::Constant(0.0), 1.0, 0.0).is_err());
        let e = Expr::parse("1/(t-1)", &["t"]).unwrap();
        let r = solve_warping(CurvatureProfile::expression(e).unwrap(), 2.0, 1e-8);
        assert!(matches!(r, Err(WarpError::NonFiniteCurvature { .. }) | Err(WarpError::StepUnderflow { .. })));
        let tab = CurvatureProfile::table(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(matches!(solve_warping(tab, 2.0, 1e-8), Err(WarpError::TableRange { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nonpositive_curvature_dominates_euclidean(a in 0.0f64..2.0, b in 0.0f64..2.0, w in 0.5f64..4.0) {
            // k(t) = -a - b sin^2(w t) <= 0
            let e = Expr::parse(&alloc::format!("-{a:?} - {b:?}*sin({w:?}*t)^2"), &["t"]).unwrap();
            let s = solve_warping(CurvatureProfile::expression(e).unwrap(), 2.0, 1e-9).unwrap();
            prop_assert!(s.l_pos.is_none());
            for (t, f) in s.grid.iter().zip(&s.f) {
                prop_assert!(*f >= *t - 1e-12 * (1.0 + t));
            }
        }

        #[test]
        fn constant_curvature_closed_forms(kappa in -1.0f64..1.0, t in 0.0f64..2.5) {
            let s = solve_warping(CurvatureProfile::Constant(kappa), 2.5, 1e-10).unwrap();
            let exact = if kappa > 0.0 {
                (kappa.sqrt() * t).sin() / kappa.sqrt()
            } else if kappa < 0.0 {
                ((-kappa).sqrt() * t).sinh() / (-kappa).sqrt()
            } else {
                t
            };
            let (f, _) = s.warp_at(t).unwrap();
            prop_assert!((f - exact).abs() < 1e-8 * (1.0 + exact.abs()));
        }
    }
}
