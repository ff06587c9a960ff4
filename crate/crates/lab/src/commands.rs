//! One function per config command.

use std::f64::consts::PI;

use speclab_core::comparisons::{
    escobar_half_bound_check, fact1_check, steklov_lower_bound_check, test_function_rq, wentzell_comparison,
    ComparisonVerdict, Resolution, EQUALITY_TOL, SLACK_TOL,
};
use speclab_core::expr::Expr;
use speclab_core::fem::{harmonic_extension, Grid2D, DEFAULT_T0_FRACTION};
use speclab_core::geom::{boundary_geometry, MetricField};
use speclab_core::identities::{
    ma_du_residual, pohozaev_discrete, pohozaev_residual, qiu_xia_residual, reilly_classical_residual,
    reilly_general_residual, FieldBundle, IdentityError, Patch, Quadrature, ReillyReport, VectorField,
};
use speclab_core::radial::model_wentzell_tau1;
use speclab_core::warp::{solve_warping, DEFAULT_T_MAX};

use crate::config::{BoundVariant, Command, Geometry, RunConfig};
use crate::report::{Provenance, Report, ReportRow, TermRow, VerdictRow};
use crate::{solver, LabError};

const WARP_TOL: f64 = 1e-10;
const RADIAL_TOL: f64 = 1e-10;

pub fn run_command(cfg: &RunConfig) -> Result<Report, LabError> {
    match cfg.command {
        Command::Warp => warp(cfg),
        Command::ModelSpectrum => model_spectrum(cfg),
        Command::Compare => compare(cfg),
        Command::Fact1 => fact1(cfg),
        Command::Reilly => reilly(cfg),
        Command::Pohozaev => pohozaev(cfg),
        Command::SteklovBound => steklov_bound(cfg),
    }
}

/// Closed-form warping function `(f, f')` for constant curvature `k`.
pub fn constant_curvature_warp(k: f64, t: f64) -> (f64, f64) {
    if k > 0.0 {
        let s = k.sqrt();
        ((s * t).sin() / s, (s * t).cos())
    } else if k < 0.0 {
        let s = (-k).sqrt();
        ((s * t).sinh() / s, (s * t).cosh())
    } else {
        (t, 1.0)
    }
}

fn metric(cfg: &RunConfig) -> Result<MetricField, LabError> {
    match &cfg.geometry {
        Geometry::Disc => Ok(MetricField::disc(cfg.r)),
        Geometry::Warped(j) => MetricField::warped(j.clone(), cfg.r).map_err(solver),
        Geometry::Pullback(radius) => {
            let radius = if cfg.r == 1.0 {
                radius.clone()
            } else {
                let zero = Expr::constant(0.0, &["theta"]);
                Expr::axpy(cfg.r, radius, &zero).expect("same variables")
            };
            MetricField::pullback(radius).map_err(solver)
        }
        Geometry::Ball3 => Err(LabError::Invalid(format!("`{}` runs on two-dimensional domains only", cfg.command))),
    }
}

fn patch(cfg: &RunConfig) -> Result<Patch, LabError> {
    Ok(match &cfg.geometry {
        Geometry::Ball3 => Patch::Ball3 { radius: cfg.r },
        Geometry::Warped(_) => Patch::Warped(metric(cfg)?),
        _ => Patch::Planar(metric(cfg)?),
    })
}

fn resolution(cfg: &RunConfig) -> Resolution {
    Resolution::new(cfg.n_t, cfg.n_theta)
}

fn zero(cfg: &RunConfig) -> Expr {
    Expr::constant(0.0, cfg.geometry.variables())
}

fn verdict_rows(cfg: &RunConfig, v: &ComparisonVerdict, report: &mut Report) {
    for (name, value) in &v.quantities {
        report.rows.push(ReportRow::info(&cfg.case, name, *value));
    }
    report.rows.push(ReportRow::check(&cfg.case, "slack", v.slack, None, Provenance::Observation, v.pass));
    report.notes.extend(v.preconditions.iter().map(|p| format!("{}: {} ({})", v.case, p.name, p.detail)));
    report.notes.extend(v.notes.iter().map(|n| format!("{}: {n}", v.case)));
    report.verdicts.push(VerdictRow {
        case: cfg.case.clone(),
        lhs: v.lhs,
        rhs: v.rhs,
        slack: v.slack,
        tol: v.tolerance,
        pass: v.pass,
        grid: cfg.grid_label(),
        seed: cfg.seed,
    });
}

fn warp(cfg: &RunConfig) -> Result<Report, LabError> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let t_max = cfg.t_max.unwrap_or(DEFAULT_T_MAX);
    let sol = solve_warping(cfg.k.clone(), t_max, WARP_TOL).map_err(solver)?;
    let case = cfg.case.as_str();
    let mut rep = Report::default();
    let kc = cfg.k.as_constant();
    match (sol.l_pos, kc) {
        (Some(l), Some(k)) if k > 0.0 => {
            rep.rows.push(ReportRow::near(case, "l_pos", l, PI / k.sqrt(), tol, Provenance::Derived))
        }
        (Some(l), _) => rep.rows.push(ReportRow::info(case, "l_pos", l)),
        (None, _) => rep.rows.push(ReportRow::info(case, "positive_up_to", sol.t_max)),
    }
    if let Some(k) = kc {
        let end = sol.l_pos.unwrap_or(f64::INFINITY).min(3.0);
        let mut err: f64 = 0.0;
        for (t, f) in sol.grid.iter().zip(&sol.f) {
            if *t < end {
                err = err.max((f - constant_curvature_warp(k, *t).0).abs());
            }
        }
        rep.rows.push(ReportRow::check(case, "max_node_error", err, Some(0.0), Provenance::Derived, err < tol));
    }
    if cfg.r < sol.limit() {
        let (f, fp) = sol.warp_at(cfg.r).map_err(solver)?;
        match kc {
            Some(k) => {
                let (ef, efp) = constant_curvature_warp(k, cfg.r);
                rep.rows.push(ReportRow::near(case, "f(r)", f, ef, tol, Provenance::Derived));
                rep.rows.push(ReportRow::near(case, "f'(r)", fp, efp, tol, Provenance::Derived));
            }
            None => {
                rep.rows.push(ReportRow::info(case, "f(r)", f));
                rep.rows.push(ReportRow::info(case, "f'(r)", fp));
            }
        }
    }
    rep.rows.push(ReportRow::info(case, "midpoint_residual", sol.midpoint_residual()));
    Ok(rep)
}

fn model_spectrum(cfg: &RunConfig) -> Result<Report, LabError> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let t_max = cfg.t_max.unwrap_or(cfg.r).max(cfg.r);
    let sol = solve_warping(cfg.k.clone(), t_max, WARP_TOL).map_err(solver)?.with_dim(cfg.n);
    let m = model_wentzell_tau1(&sol, cfg.n, cfg.r, &[cfg.beta], RADIAL_TOL).map_err(solver)?;
    let case = cfg.case.as_str();
    let mut rep = Report::default();
    let nm1 = cfg.n as f64 - 1.0;
    match cfg.k.as_constant() {
        Some(k) => {
            let f = constant_curvature_warp(k, cfg.r).0;
            let lam = nm1 / (f * f);
            if k == 0.0 {
                let p = 1.0 / cfg.r;
                rep.rows.push(ReportRow::near(case, "p1", m.p1, p, tol, Provenance::Derived));
                rep.rows.push(ReportRow::near(case, "lambda1_closed", m.lambda1_closed, lam, tol, Provenance::Derived));
                rep.rows.push(ReportRow::near(case, "tau1", m.tau1[0], p + cfg.beta * lam, tol, Provenance::Derived));
            } else {
                rep.rows.push(ReportRow::info(case, "p1", m.p1));
                rep.rows.push(ReportRow::near(case, "lambda1_closed", m.lambda1_closed, lam, tol, Provenance::Derived));
                rep.rows.push(ReportRow::info(case, "tau1", m.tau1[0]));
            }
        }
        None => {
            rep.rows.push(ReportRow::info(case, "p1", m.p1));
            rep.rows.push(ReportRow::info(case, "lambda1_closed", m.lambda1_closed));
            rep.rows.push(ReportRow::info(case, "tau1", m.tau1[0]));
        }
    }
    rep.rows.push(ReportRow::info(case, "minimizer_ell", m.minimizer_ell as f64));
    Ok(rep)
}

fn compare(cfg: &RunConfig) -> Result<Report, LabError> {
    let m = metric(cfg)?;
    if !m.is_warped() {
        return Err(LabError::Invalid("compare needs a warped metric (key `J`)".into()));
    }
    let v = wentzell_comparison(&m, &cfg.k, cfg.beta, resolution(cfg))?;
    let mut rep = Report::default();
    verdict_rows(cfg, &v, &mut rep);
    if let Some(trunc) = cfg.truncation {
        let b = test_function_rq(&m, &cfg.k, cfg.beta, resolution(cfg), trunc, None)?;
        let tol = cfg.tol.unwrap_or(SLACK_TOL);
        let case = cfg.case.as_str();
        rep.rows.push(ReportRow::info(case, "rq", b.rq));
        rep.rows.push(ReportRow::info(case, "kinks", b.kinks as f64));
        let names = ["tau1_ball <= rq", "rq <= p1_model + beta lambda1_closed_ball", "lambda1_closed_ball <= lambda1_closed_model"];
        for (name, s) in names.iter().zip(b.chain_slacks(cfg.beta)) {
            rep.rows.push(ReportRow::check(case, name, s, None, Provenance::Observation, s >= -tol));
        }
    }
    Ok(rep)
}

fn fact1(cfg: &RunConfig) -> Result<Report, LabError> {
    let m = metric(cfg)?;
    let v = fact1_check(&m, cfg.beta, resolution(cfg))?;
    let mut rep = Report::default();
    verdict_rows(cfg, &v, &mut rep);
    if cfg.geometry == Geometry::Disc {
        // Separation of variables: e_1 = cos theta serves all three problems.
        let r = cfg.r;
        let case = cfg.case.as_str();
        let tau = v.quantity("tau1").unwrap_or(f64::NAN);
        rep.rows.push(ReportRow::near(case, "tau1 (disc)", tau, 1.0 / r + cfg.beta / (r * r), EQUALITY_TOL, Provenance::Derived));
        rep.rows.push(ReportRow::near(case, "|slack| (disc)", v.slack.abs(), 0.0, EQUALITY_TOL, Provenance::Derived));
    }
    Ok(rep)
}

// f = x^2 - y^2, V = 1, K = 0, phi = 0 on the unit disc.
fn is_saddle_case(cfg: &RunConfig, b: &FieldBundle) -> bool {
    if cfg.geometry != Geometry::Disc || cfg.r != 1.0 || b.k != 0.0 {
        return false;
    }
    if b.v.as_constant() != Some(1.0) || b.phi.as_constant() != Some(0.0) {
        return false;
    }
    [[0.3, -0.7], [1.1, 0.2], [-0.4, 0.9]]
        .iter()
        .all(|p| b.f.eval(p).map(|v| (v - (p[0] * p[0] - p[1] * p[1])).abs() < 1e-14).unwrap_or(false))
}

fn reilly(cfg: &RunConfig) -> Result<Report, LabError> {
    let f = cfg.f.clone().ok_or(crate::ConfigError::Missing("f"))?;
    let b = FieldBundle {
        f,
        v: cfg.v.clone().unwrap_or_else(|| Expr::constant(1.0, cfg.geometry.variables())),
        phi: cfg.phi.clone().unwrap_or_else(|| zero(cfg)),
        k: cfg.kappa,
        patch: patch(cfg)?,
    };
    let q = Quadrature { order: cfg.order, refinement: cfg.refinement, hole: 0.0 };
    let tol = cfg.tol.unwrap_or(1e-8);
    let g = reilly_general_residual(&b, &q)?;
    let case = cfg.case.as_str();
    let mut rep = Report::default();
    if is_saddle_case(cfg, &b) {
        let exact = -8.0 * PI;
        rep.rows.push(ReportRow::near(case, "lhs", g.lhs, exact, 1e-10, Provenance::Derived));
        rep.rows.push(ReportRow::near(case, "rhs", g.rhs, exact, 1e-10, Provenance::Derived));
        rep.rows.push(ReportRow::check(case, "residual", g.residual, Some(0.0), Provenance::Derived, g.residual < 1e-10));
    } else {
        rep.rows.push(ReportRow::info(case, "lhs", g.lhs));
        rep.rows.push(ReportRow::info(case, "rhs", g.rhs));
        rep.rows.push(ReportRow::check(case, "residual", g.residual, Some(0.0), Provenance::Trivial, g.residual < tol));
    }
    type Degeneration = fn(&FieldBundle, &Quadrature) -> Result<ReillyReport, IdentityError>;
    let degenerations: [(&str, Degeneration); 3] =
        [("classical", reilly_classical_residual), ("qiu-xia", qiu_xia_residual), ("ma-du", ma_du_residual)];
    for (name, run) in degenerations {
        match run(&b, &q) {
            Ok(d) => {
                let a = g.agreement(&d);
                rep.rows.push(ReportRow::check(case, &format!("agreement {name}"), a, Some(0.0), Provenance::Trivial, a <= 1e-14));
                rep.rows.push(ReportRow::check(case, &format!("residual {name}"), d.residual, Some(0.0), Provenance::Trivial, d.residual < tol));
            }
            Err(IdentityError::Precondition(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    for (side, terms) in [("lhs", &g.lhs_terms), ("rhs", &g.rhs_terms)] {
        for (term, value) in terms {
            rep.terms.push(TermRow { case: cfg.case.clone(), side, term: term.clone(), value: *value });
        }
    }
    Ok(rep)
}

fn field(cfg: &RunConfig) -> VectorField {
    match &cfg.field {
        Some(c) => VectorField(c.clone()),
        None => VectorField::position(cfg.geometry.variables().len()),
    }
}

fn pohozaev(cfg: &RunConfig) -> Result<Report, LabError> {
    let case = cfg.case.as_str();
    let mut rep = Report::default();
    let r = match &cfg.data {
        Some(data) => {
            if !matches!(cfg.geometry, Geometry::Disc | Geometry::Pullback(_)) {
                return Err(LabError::Invalid("the discrete Pohozaev check runs on planar domains".into()));
            }
            let mut m = metric(cfg)?;
            if let Some(phi) = &cfg.phi {
                m = m.with_weight(phi.clone()).map_err(solver)?;
            }
            let t0 = cfg.t0.unwrap_or(DEFAULT_T0_FRACTION) * m.outer();
            let grid = Grid2D::with_t0(&m, cfg.n_t, cfg.n_theta, t0).map_err(solver)?;
            let g: Vec<f64> =
                (0..grid.n_theta()).map(|j| data.eval(&[grid.theta(j)])).collect::<Result<_, _>>().map_err(solver)?;
            let u = harmonic_extension(&m, &grid, &g).map_err(solver)?;
            let r = pohozaev_discrete(&m, &grid, &u, &field(cfg), 3)?;
            let tol = cfg.tol.unwrap_or(5e-3);
            rep.rows.push(ReportRow::check(case, "residual", r.residual, Some(0.0), Provenance::Trivial, r.residual < tol));
            rep.rows.push(ReportRow::info(case, "inner_rim", r.inner_rim));
            r
        }
        None => {
            let u = cfg.u.clone().ok_or(crate::ConfigError::Missing("u"))?;
            let phi = cfg.phi.clone().unwrap_or_else(|| zero(cfg));
            let q = Quadrature { order: cfg.order, refinement: cfg.refinement, hole: 0.0 };
            let r = pohozaev_residual(&patch(cfg)?, &phi, &u, &field(cfg), &q)?;
            let tol = cfg.tol.unwrap_or(1e-10);
            rep.rows.push(ReportRow::check(case, "residual", r.residual, Some(0.0), Provenance::Trivial, r.residual < tol));
            rep.rows.push(ReportRow::info(case, "harmonic_defect", r.harmonic_defect));
            r
        }
    };
    rep.rows.push(ReportRow::info(case, "boundary", r.boundary));
    rep.rows.push(ReportRow::info(case, "interior", r.interior));
    Ok(rep)
}

fn steklov_bound(cfg: &RunConfig) -> Result<Report, LabError> {
    let domain = metric(cfg)?;
    if domain.is_warped() {
        return Err(LabError::Invalid("steklov-bound needs a planar domain (preset or `R`)".into()));
    }
    let phi = cfg.phi.clone().unwrap_or_else(|| zero(cfg));
    let res = resolution(cfg);
    let tol = cfg.tol.unwrap_or(1e-3);
    let case = cfg.case.as_str();
    let mut rep = Report::default();
    let v = match cfg.variant {
        BoundVariant::Sharp => {
            let c = match cfg.c {
                Some(c) => c,
                None => {
                    let bd = boundary_geometry(&domain, cfg.n_theta).map_err(solver)?;
                    bd.kappa_g.iter().cloned().fold(f64::INFINITY, f64::min)
                }
            };
            let v = steklov_lower_bound_check(&domain, &phi, c, res, tol)?;
            if cfg.geometry == Geometry::Disc && phi.as_constant() == Some(0.0) {
                rep.rows.push(ReportRow::near(case, "sigma1 (disc)", v.rhs, 1.0 / cfg.r, EQUALITY_TOL, Provenance::Paper));
            }
            v
        }
        BoundVariant::Escobar => {
            let c = cfg.c.ok_or(crate::ConfigError::Missing("c"))?;
            escobar_half_bound_check(&domain, &phi, c, res, tol)?
        }
    };
    verdict_rows(cfg, &v, &mut rep);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<Report, LabError> {
        run_command(&text.parse().unwrap())
    }

    #[test]
    fn model_spectrum_example() {
        let r = run("command = \"model-spectrum\"\nk = 0\nn = 2\nr = 1\nbeta = 1\n").unwrap();
        let tau = r.rows.iter().find(|x| x.quantity == "tau1").unwrap();
        assert!((tau.value - 2.0).abs() < 1e-8 && tau.pass == Some(true));
        assert!(r.passed());
    }

    #[test]
    fn reilly_saddle_example() {
        let r = run("command = \"reilly\"\npreset = \"disc-quadratic\"\nV = 1\nK = 0\nphi = 0\nf = \"x^2-y^2\"\n").unwrap();
        assert!(r.passed(), "{r:?}");
        let lhs = r.rows.iter().find(|x| x.quantity == "lhs").unwrap();
        assert_eq!(lhs.reference, Some(-8.0 * PI));
        assert_eq!(r.terms.len(), 10);
    }

    #[test]
    fn warp_closed_forms() {
        for k in ["1", "0", "-1"] {
            let r = run(&format!("command = \"warp\"\nk = {k}\nt_max = 4\nr = 1\n")).unwrap();
            assert!(r.passed(), "{k}: {r:?}");
        }
    }

    #[test]
    fn compare_negative_curvature_precondition_aborts() {
        let e = run("command = \"compare\"\nJ = \"t*(1-0.05*t^2)\"\nk = 0\nbeta = 0.5\nn_t = 16\n").unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }

    #[test]
    fn geometry_mismatch_is_invalid_input() {
        let e = run("command = \"compare\"\nbeta = 1\nn_t = 16\n").unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let e = run("command = \"fact1\"\npreset = \"ball3\"\nn_t = 16\n").unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn pohozaev_both_paths() {
        let r = run("command = \"pohozaev\"\nu = \"x\"\n").unwrap();
        assert!(r.passed(), "{r:?}");
        let r = run("command = \"pohozaev\"\ndata = \"sin(theta)\"\nphi = \"x\"\nn_t = 32\n").unwrap();
        assert!(r.passed(), "{r:?}");
        let e = run("command = \"pohozaev\"\nu = \"x^2\"\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
