//! Radial Steklov modes of geodesic balls in a model space.
//!
//! For angular degree `l` the mode `psi(t) Y_l` is harmonic when
//! `psi'' + (n-1)(f'/f) psi' - l(l+n-2) psi / f^2 = 0`. The regular
//! solution behaves like `t^l` at the pole, and its Steklov eigenvalue on the
//! ball of radius `r` is `psi'(r)/psi(r)`.

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

use crate::math::{interval, quintic_hermite, Sum};
use crate::ode::{self, Flow, OdeError, Tolerance};
use crate::warp::{WarpError, WarpingSolution};

/// Default largest angular degree scanned by [`model_p1`].
pub const DEFAULT_ELL_MAX: u32 = 8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RadialError {
    #[error("radius {r} outside the positivity interval (limit {limit})")]
    RadiusOutOfRange { r: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("psi lost positivity at t = {t}")]
    PositivityLost { t: f64 },
    #[error("sign violation at sample {index} (t = {t}): psi = {psi}, psi' = {dpsi}")]
    SignViolation { index: usize, t: f64, psi: f64, dpsi: f64 },
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Warp(#[from] WarpError),
}

/// One radial mode, normalized so that `psi(r) = 1`.
#[derive(Clone, Debug)]
pub struct RadialMode {
    pub ell: u32,
    pub n_dim: usize,
    pub r: f64,
    /// Steklov eigenvalue `psi'(r) / psi(r)`.
    pub p: f64,
    pub t: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
}

impl RadialMode {
    fn mu(&self) -> f64 {
        let l = self.ell as f64;
        l * (l + self.n_dim as f64 - 2.0)
    }

    fn psi_second(&self, i: usize) -> f64 {
        let n1 = self.n_dim as f64 - 1.0;
        -n1 * self.f_prime[i] / self.f[i] * self.psi_prime[i] + self.mu() * self.psi[i] / (self.f[i] * self.f[i])
    }

    /// `(psi(t), psi'(t))` on `[0, r]`; below the first sample the leading
    /// power `t^l` is used.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let t0 = self.t[0];
        if t <= t0 {
            if t <= 0.0 {
                return (0.0, if self.ell == 1 { self.psi_prime[0] } else { 0.0 });
            }
            let l = self.ell as i32;
            let s = t / t0;
            return (self.psi[0] * s.powi(l), self.psi[0] * l as f64 * s.powi(l - 1) / t0);
        }
        let i = interval(&self.t, t.min(self.r));
        let h = self.t[i + 1] - self.t[i];
        let (v, d, _) = quintic_hermite(
            h,
            (t - self.t[i]) / h,
            (self.psi[i], self.psi_prime[i], self.psi_second(i)),
            (self.psi[i + 1], self.psi_prime[i + 1], self.psi_second(i + 1)),
        );
        (v, d)
    }
}

fn check_radius(sol: &WarpingSolution, r: f64) -> Result<(), RadialError> {
    let ok = r > 0.0
        && match sol.l_pos {
            Some(l) => r < l && r <= sol.t_max,
            None => r <= sol.t_max,
        };
    if ok {
        Ok(())
    } else {
        Err(RadialError::RadiusOutOfRange { r, limit: sol.limit() })
    }
}

/// Shoots the degree-`ell` mode on the ball of radius `r` in dimension `n`.
pub fn steklov_mode(sol: &WarpingSolution, n: usize, ell: u32, r: f64, tol: f64) -> Result<RadialMode, RadialError> {
    if n < 2 {
        return Err(RadialError::InvalidInput("dimension must be at least 2"));
    }
    if ell < 1 {
        return Err(RadialError::InvalidInput("angular degree must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(RadialError::InvalidInput("tol must be positive"));
    }
    check_radius(sol, r)?;
    let k = sol.profile();
    let k0 = k.at_pole().ok_or(WarpError::NonFiniteCurvature { t: 0.0 })?;
    let nf = n as f64;
    let l = ell as f64;
    let mu = l * (l + nf - 2.0);
    let eps = 1e-6 * r;
    // Two-term Frobenius data, with psi scaled by eps^-l.
    let c = k0 * l * (l + 2.0 * nf - 3.0) / (6.0 * (2.0 * l + nf));
    let y0 = [
        eps - k0 * eps * eps * eps / 6.0,
        1.0 - 0.5 * k0 * eps * eps,
        1.0 + c * eps * eps,
        l / eps + c * (l + 2.0) * eps,
    ];
    let rtol = (tol * 1e-2).clamp(1e-13, 1e-8);
    let tolerance = Tolerance { rtol, atol: [rtol * r, rtol, 1e-300, 1e-300], h_max: r / 48.0, h_init: 0.1 * eps };
    let rhs = |t: f64, y: &[f64; 4]| match k.eval(t) {
        Some(kt) => [
            y[1],
            -kt * y[0],
            y[3],
            -(nf - 1.0) * y[1] / y[0] * y[3] + mu * y[2] / (y[0] * y[0]),
        ],
        None => [f64::NAN; 4],
    };
    let mut ts = Vec::new();
    let mut ys: Vec<[f64; 4]> = Vec::new();
    let mut lost = None;
    ode::integrate(rhs, eps, y0, r, &tolerance, |t, y, _| {
        if !(y[2] > 0.0) || !(y[0] > 0.0) {
            lost = Some(t);
            return Flow::Stop;
        }
        ts.push(t);
        ys.push(*y);
        Flow::Continue
    })?;
    if let Some(t) = lost {
        return Err(RadialError::PositivityLost { t });
    }
    let last = ys[ys.len() - 1];
    let scale = 1.0 / last[2];
    let p = last[3] / last[2];
    Ok(RadialMode {
        ell,
        n_dim: n,
        r,
        p,
        t: ts,
        psi: ys.iter().map(|y| y[2] * scale).collect(),
        psi_prime: ys.iter().map(|y| y[3] * scale).collect(),
        f: ys.iter().map(|y| y[0]).collect(),
        f_prime: ys.iter().map(|y| y[1]).collect(),
    })
}

/// Lowest radial Steklov mode over degrees `1..=ell_max`.
#[derive(Clone, Debug)]
pub struct ModelP1 {
    pub mode: RadialMode,
    /// `p_l` for `l = 1..=ell_max`.
    pub p_by_ell: Vec<f64>,
    /// False when some `l > 1` gives a smaller value than `l = 1`.
    pub minimizer_is_ell1: bool,
}

pub fn model_p1(sol: &WarpingSolution, n: usize, r: f64, ell_max: u32, tol: f64) -> Result<ModelP1, RadialError> {
    if ell_max < 1 {
        return Err(RadialError::InvalidInput("ell_max must be at least 1"));
    }
    let mut best: Option<RadialMode> = None;
    let mut p_by_ell = Vec::with_capacity(ell_max as usize);
    for ell in 1..=ell_max {
        let m = steklov_mode(sol, n, ell, r, tol)?;
        p_by_ell.push(m.p);
        if best.as_ref().is_none_or(|b| m.p < b.p) {
            best = Some(m);
        }
    }
    let mode = best.expect("at least one degree");
    let minimizer_is_ell1 = mode.ell == 1;
    Ok(ModelP1 { mode, p_by_ell, minimizer_is_ell1 })
}

/// First nonzero eigenvalue of the round boundary sphere, `(n-1)/f(r)^2`.
pub fn closed_sphere_lambda1(sol: &WarpingSolution, n: usize, r: f64) -> Result<f64, RadialError> {
    check_radius(sol, r)?;
    let (f, _) = sol.warp_at(r)?;
    Ok((n as f64 - 1.0) / (f * f))
}

/// First Wentzell eigenvalue of the model ball for each `beta`.
#[derive(Clone, Debug)]
pub struct ModelBallSpectrum {
    pub p1: f64,
    pub lambda1_closed: f64,
    pub betas: Vec<f64>,
    pub tau1: Vec<f64>,
    pub r: f64,
    pub n_dim: usize,
    pub minimizer_ell: u32,
}

pub fn model_wentzell_tau1(
    sol: &WarpingSolution,
    n: usize,
    r: f64,
    betas: &[f64],
    tol: f64,
) -> Result<ModelBallSpectrum, RadialError> {
    if betas.iter().any(|b| !(*b >= 0.0)) {
        return Err(RadialError::InvalidInput("beta must be non-negative"));
    }
    let m = model_p1(sol, n, r, DEFAULT_ELL_MAX, tol)?;
    let lam = closed_sphere_lambda1(sol, n, r)?;
    Ok(ModelBallSpectrum {
        p1: m.mode.p,
        lambda1_closed: lam,
        betas: betas.to_vec(),
        tau1: betas.iter().map(|b| m.mode.p + b * lam).collect(),
        r,
        n_dim: n,
        minimizer_ell: m.mode.ell,
    })
}

/// Outcome of [`psi_sign_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct SignReport {
    pub min_psi: f64,
    pub min_psi_prime: f64,
    /// Largest relative mismatch in
    /// `psi'(t) f^{n-1}(t) = (n-1) int_0^t psi f^{n-3}`; degree one only.
    pub representation_residual: Option<f64>,
}

/// Checks `psi > 0`, `psi' > 0` at every interior sample, and for `l = 1`
/// the integral representation of `psi'`.
pub fn psi_sign_report(mode: &RadialMode) -> Result<SignReport, RadialError> {
    let n = mode.t.len();
    let mut min_psi = f64::INFINITY;
    let mut min_dpsi = f64::INFINITY;
    for i in 0..n {
        let (p, d) = (mode.psi[i], mode.psi_prime[i]);
        if i + 1 < n && !(p > 0.0 && d > 0.0) {
            return Err(RadialError::SignViolation { index: i, t: mode.t[i], psi: p, dpsi: d });
        }
        min_psi = min_psi.min(p);
        min_dpsi = min_dpsi.min(d);
    }
    let representation_residual = (mode.ell == 1).then(|| representation_residual(mode));
    Ok(SignReport { min_psi, min_psi_prime: min_dpsi, representation_residual })
}

fn representation_residual(mode: &RadialMode) -> f64 {
    let nf = mode.n_dim as f64;
    let g = |i: usize| {
        let (p, dp, f, df) = (mode.psi[i], mode.psi_prime[i], mode.f[i], mode.f_prime[i]);
        let v = p * f.powf(nf - 3.0);
        let d = dp * f.powf(nf - 3.0) + (nf - 3.0) * p * f.powf(nf - 4.0) * df;
        (v, d)
    };
    // Near the pole psi ~ c t and f ~ t, so the head integral is
    // psi(eps) eps^{n-2} / (n-1).
    let eps = mode.t[0];
    let mut acc = Sum::new();
    acc.add(mode.psi[0] * eps.powf(nf - 2.0) / (nf - 1.0));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut pairs = Vec::with_capacity(mode.t.len());
    for i in 0..mode.t.len() {
        if i > 0 {
            let h = mode.t[i] - mode.t[i - 1];
            let (ga, da) = g(i - 1);
            let (gb, db) = g(i);
            acc.add(0.5 * h * (ga + gb) + h * h / 12.0 * (da - db));
        }
        let lhs = mode.psi_prime[i] * mode.f[i].powf(nf - 1.0);
        let rhs = (nf - 1.0) * acc.value();
        scale = scale.max(lhs.abs());
        pairs.push((lhs, rhs));
    }
    for (lhs, rhs) in pairs {
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::warp::{solve_warping, CurvatureProfile};
    use core::f64::consts::PI;

    fn model(k: f64, t_max: f64) -> WarpingSolution {
        solve_warping(CurvatureProfile::Constant(k), t_max, 1e-11).unwrap()
    }

    #[test]
    fn euclidean_modes_are_powers() {
        let sol = model(0.0, 3.0);
        let m = steklov_mode(&sol, 2, 1, 1.0, 1e-10).unwrap();
        assert!((m.p - 1.0).abs() < 1e-9, "{}", m.p);
        let m = steklov_mode(&sol, 3, 2, 0.5, 1e-10).unwrap();
        assert!((m.p - 4.0).abs() < 1e-8, "{}", m.p);
        for ell in 1..6 {
            for r in [0.3, 1.0, 2.5] {
                let m = steklov_mode(&sol, 2, ell, r, 1e-10).unwrap();
                assert!((m.p - ell as f64 / r).abs() < 1e-8 * ell as f64 / r);
            }
        }
    }

    #[test]
    fn two_dimensional_closed_form() {
        // In two dimensions the modes are (tan(t/2))^l on the sphere, so p_l = l / sin r.
        let sol = model(1.0, 3.0);
        for ell in 1..4 {
            let m = steklov_mode(&sol, 2, ell, PI / 3.0, 1e-10).unwrap();
            let exact = ell as f64 / (PI / 3.0).sin();
            assert!((m.p - exact).abs() < 1e-8 * exact, "{ell}: {} vs {exact}", m.p);
        }
        let sol = model(-1.0, 2.0);
        let m = steklov_mode(&sol, 2, 1, 1.0, 1e-10).unwrap();
        assert!((m.p - 1.0 / 1.0f64.sinh()).abs() < 1e-8);
    }

    #[test]
    fn model_p1_and_closed_spectrum() {
        let sol = model(0.0, 3.0);
        let m = model_p1(&sol, 2, 1.0, 8, 1e-10).unwrap();
        assert!(m.minimizer_is_ell1);
        assert!((m.mode.p - 1.0).abs() < 1e-9);
        assert!((closed_sphere_lambda1(&sol, 2, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((closed_sphere_lambda1(&sol, 3, 2.0).unwrap() - 0.5).abs() < 1e-12);
        let sph = model(1.0, 3.0);
        assert!((closed_sphere_lambda1(&sph, 2, PI / 2.0).unwrap() - 1.0).abs() < 1e-9);
        let spec = model_wentzell_tau1(&sol, 2, 1.0, &[0.0, 1.0], 1e-10).unwrap();
        assert!((spec.tau1[0] - 1.0).abs() < 1e-9 && (spec.tau1[1] - 2.0).abs() < 1e-9);
        let spec = model_wentzell_tau1(&sol, 3, 1.0, &[0.5], 1e-10).unwrap();
        assert!((spec.tau1[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sign_report() {
        let sol = model(0.0, 2.0);
        let m = steklov_mode(&sol, 2, 1, 1.0, 1e-10).unwrap();
        let rep = psi_sign_report(&m).unwrap();
        assert!(rep.representation_residual.unwrap() < 1e-8);
        let sph = model(1.0, 3.0);
        let m = steklov_mode(&sph, 2, 1, PI / 3.0, 1e-10).unwrap();
        let rep = psi_sign_report(&m).unwrap();
        assert!(rep.representation_residual.unwrap() < 1e-8, "{rep:?}");
        let m3 = steklov_mode(&sph, 3, 1, PI / 3.0, 1e-10).unwrap();
        assert!(psi_sign_report(&m3).unwrap().representation_residual.unwrap() < 1e-8);
        let mut bad = m.clone();
        bad.psi[5] = -bad.psi[5];
        assert!(matches!(psi_sign_report(&bad), Err(RadialError::SignViolation { index: 5, .. })));
    }

    #[test]
    fn radius_must_be_inside_positivity_interval() {
        let sph = model(1.0, 4.0);
        assert!(matches!(steklov_mode(&sph, 2, 1, 3.2, 1e-8), Err(RadialError::RadiusOutOfRange { .. })));
        assert!(steklov_mode(&sph, 2, 0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn interpolated_mode_matches_closed_form() {
        let sph = model(1.0, 3.0);
        let m = steklov_mode(&sph, 2, 1, 1.0, 1e-10).unwrap();
        let norm = (0.5f64).tan();
        for k in 1..50 {
            let t = k as f64 / 50.0;
            let (v, d) = m.eval(t);
            assert!((v - (0.5 * t).tan() / norm).abs() < 1e-8);
            assert!((d - 0.5 / (0.5 * t).cos().powi(2) / norm).abs() < 1e-7);
        }
    }
}
