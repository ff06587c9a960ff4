//! The acceptance battery behind `--suite`.
//!
//! Each criterion returns its checked rows; the suite CSV is the
//! concatenation of those rows and carries no timings, so two runs with the
//! same seed are byte-identical.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use speclab_core::comparisons::{
    escobar_half_bound_check, fact1_check, steklov_lower_bound_check, test_function_rq, wentzell_comparison,
    ComparisonError, Resolution, Truncation, EQUALITY_TOL,
};
use speclab_core::expr::Expr;
use speclab_core::fem::{harmonic_extension, steklov_spectrum, BoundaryProblem, Grid2D};
use speclab_core::geom::{boundary_geometry, MetricField};
use speclab_core::identities::{
    ma_du_residual, pohozaev_discrete, pohozaev_residual, qiu_xia_residual, reilly_classical_residual,
    reilly_general_residual, FieldBundle, Patch, Quadrature, VectorField,
};
use speclab_core::radial::model_wentzell_tau1;
use speclab_core::warp::{solve_warping, CurvatureProfile};

use crate::commands::constant_curvature_warp;
use crate::report::{Provenance, Report, ReportRow};
use crate::sweep::par_map;

pub const CRITERIA: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub threads: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: crate::config::DEFAULT_SEED, threads: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub rows: Vec<ReportRow>,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
    /// Short reason when a row failed or the run aborted.
    pub notes: Vec<String>,
}

impl CriterionResult {
    pub fn within_time(&self) -> bool {
        self.time_limit.is_none_or(|l| self.elapsed <= l)
    }

    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass != Some(false)) && self.within_time()
    }

    /// One line of the pass/fail matrix.
    pub fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let limit = self.time_limit.map(|l| format!(" (limit {:.0} s)", l.as_secs_f64())).unwrap_or_default();
        let failed: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.pass == Some(false))
            .map(|r| format!("{}/{} = {:.6e}", r.case, r.quantity, r.value))
            .collect();
        let mut s = format!(
            "criterion {} {verdict}: {} [{} checks, {:.2} s{limit}]",
            self.id,
            self.title,
            self.rows.iter().filter(|r| r.pass.is_some()).count(),
            self.elapsed.as_secs_f64()
        );
        if !failed.is_empty() {
            s.push_str(&format!(" failed: {}", failed.join("; ")));
        }
        if !self.within_time() {
            s.push_str(" over time limit");
        }
        s
    }
}

fn rng(opts: &SuiteOptions, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64))
}

fn fail_row(case: &str, quantity: &str, note: &mut Vec<String>, e: impl std::fmt::Display) -> ReportRow {
    note.push(format!("{case}: {e}"));
    ReportRow::check(case, quantity, f64::NAN, None, Provenance::Observation, false)
}

fn xy(text: &str) -> Expr {
    Expr::parse(text, &["x", "y"]).expect("generated expression parses")
}

fn tt(text: &str) -> Expr {
    Expr::parse(text, &["t", "theta"]).expect("generated expression parses")
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "warping closed forms",
        2 => "disc Steklov spectrum at 256x256",
        3 => "Wentzell separation on the unit disc",
        4 => "Wentzell versus Steklov on perturbed metrics",
        5 => "Wentzell comparison chain with the trial function",
        6 => "weighted Reilly identities",
        7 => "weighted Pohozaev identity",
        8 => "weighted Steklov lower bounds",
        9 => "determinism of the suite CSV",
        _ => "unknown criterion",
    }
}

/// Runs one criterion. Criterion 9 runs criteria 1 to 8 twice.
pub fn criterion(id: u8, opts: &SuiteOptions) -> CriterionResult {
    let start = Instant::now();
    let mut notes = Vec::new();
    let (rows, limit) = match id {
        1 => (warping(&mut notes), Some(1.0)),
        2 => (disc_spectrum(&mut notes), Some(60.0)),
        3 => (wentzell_disc(&mut notes), None),
        4 => (fact1(opts, &mut notes), None),
        5 => (chain(opts, &mut notes), None),
        6 => (reilly(opts, &mut notes), Some(30.0)),
        7 => (pohozaev(&mut notes), None),
        8 => (lower_bounds(opts, &mut notes), Some(120.0)),
        9 => (determinism(opts), None),
        _ => (Vec::new(), None),
    };
    CriterionResult {
        id,
        title: title(id),
        rows,
        elapsed: start.elapsed(),
        time_limit: limit.map(Duration::from_secs_f64),
        notes,
    }
}

/// Rows of criteria 1 to 8 as CSV bytes.
pub fn battery_csv(opts: &SuiteOptions) -> Vec<u8> {
    let mut r = Report::default();
    for id in 1..CRITERIA {
        r.rows.extend(criterion(id, opts).rows);
    }
    r.rows_csv()
}

/// Full suite: criteria 1 to 8 once, then criterion 9 re-runs them and
/// compares the CSV bytes.
pub struct Suite {
    pub criteria: Vec<CriterionResult>,
}

impl Suite {
    pub fn run(opts: &SuiteOptions, mut progress: impl FnMut(&CriterionResult)) -> Self {
        let mut criteria = Vec::new();
        for id in 1..CRITERIA {
            let c = criterion(id, opts);
            progress(&c);
            criteria.push(c);
        }
        let start = Instant::now();
        let first = Self::rows_of(&criteria).rows_csv();
        let second = battery_csv(opts);
        let same = first == second;
        let c9 = CriterionResult {
            id: 9,
            title: title(9),
            rows: vec![ReportRow::check("suite", "byte_identical", same as u8 as f64, Some(1.0), Provenance::Trivial, same)],
            elapsed: start.elapsed(),
            time_limit: None,
            notes: Vec::new(),
        };
        progress(&c9);
        criteria.push(c9);
        Self { criteria }
    }

    fn rows_of(criteria: &[CriterionResult]) -> Report {
        let mut r = Report::default();
        for c in criteria {
            r.rows.extend(c.rows.iter().cloned());
        }
        r
    }

    pub fn report(&self) -> Report {
        Self::rows_of(&self.criteria)
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass())
    }
}

fn determinism(opts: &SuiteOptions) -> Vec<ReportRow> {
    let a = battery_csv(opts);
    let b = battery_csv(opts);
    let same = a == b;
    vec![ReportRow::check("suite", "byte_identical", same as u8 as f64, Some(1.0), Provenance::Trivial, same)]
}

fn warping(notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for k in [0.0, 1.0, -1.0] {
        let case = format!("k={k}");
        let sol = match solve_warping(CurvatureProfile::Constant(k), 4.0, 1e-10) {
            Ok(s) => s,
            Err(e) => {
                rows.push(fail_row(&case, "solve", notes, e));
                continue;
            }
        };
        let end = sol.l_pos.unwrap_or(f64::INFINITY).min(3.0);
        let err = sol
            .grid
            .iter()
            .zip(&sol.f)
            .filter(|(t, _)| **t < end)
            .map(|(t, f)| (f - constant_curvature_warp(k, *t).0).abs())
            .fold(0.0, f64::max);
        rows.push(ReportRow::check(&case, "max_node_error", err, Some(0.0), Provenance::Derived, err < 1e-8));
        if k > 0.0 {
            match sol.l_pos {
                Some(l) => rows.push(ReportRow::near(&case, "l_pos", l, PI, 1e-8, Provenance::Derived)),
                None => rows.push(fail_row(&case, "l_pos", notes, "no zero found")),
            }
        }
    }
    rows
}

fn disc_spectrum(notes: &mut Vec<String>) -> Vec<ReportRow> {
    let m = MetricField::disc(1.0);
    let r = Grid2D::new(&m, 256, 256).and_then(|g| steklov_spectrum(&m, &g, 6));
    match r {
        Ok(r) => [1.0, 1.0, 2.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, e)| ReportRow::near("unit disc 256x256", &format!("p{}", i + 1), r.values[i + 1], *e, 1e-3, Provenance::Derived))
            .collect(),
        Err(e) => vec![fail_row("unit disc 256x256", "spectrum", notes, e)],
    }
}

fn wentzell_disc(notes: &mut Vec<String>) -> Vec<ReportRow> {
    let betas = [0.0, 0.25, 0.5, 1.0];
    let case = "unit disc 128x128";
    let m = MetricField::disc(1.0);
    let model = solve_warping(CurvatureProfile::Constant(0.0), 1.0, 1e-10)
        .map_err(|e| e.to_string())
        .and_then(|s| model_wentzell_tau1(&s, 2, 1.0, &betas, 1e-10).map_err(|e| e.to_string()));
    let bp = Grid2D::new(&m, 128, 128).and_then(|g| BoundaryProblem::new(&m, &g));
    let (model, bp) = match (model, bp) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => return vec![fail_row(case, "model", notes, e)],
        (_, Err(e)) => return vec![fail_row(case, "fem", notes, e)],
    };
    let mut rows = Vec::new();
    for (b, t) in betas.iter().zip(&model.tau1) {
        match bp.wentzell(*b, 2) {
            Ok(r) => {
                let tau = r.values[1];
                rows.push(ReportRow::near(case, &format!("tau1 beta={b}"), tau, 1.0 + b, 2e-3, Provenance::Derived));
                rows.push(ReportRow::near(case, &format!("tau1 - model beta={b}"), tau - t, 0.0, 2e-3, Provenance::Derived));
            }
            Err(e) => rows.push(fail_row(case, &format!("tau1 beta={b}"), notes, e)),
        }
    }
    rows
}

const TRIG: [&str; 2] = ["cos", "sin"];
const BASES: [&str; 3] = ["t", "sin(t)", "(exp(t)-exp(-t))/2"];

/// Warped metric `base(t) (1 + a t^2 trig(m theta + s))`, `|a| <= 0.1`.
fn perturbed_warped(rng: &mut ChaCha8Rng) -> String {
    let base = BASES[rng.gen_range(0..BASES.len())];
    let a: f64 = rng.gen_range(-0.1..0.1);
    let m: u32 = rng.gen_range(1..=3);
    let s: f64 = rng.gen_range(0.0..2.0 * PI);
    let trig = TRIG[rng.gen_range(0..2)];
    format!("{base}*(1+({a:.17e})*t^2*{trig}({m}*theta+({s:.17e})))")
}

const CHAIN_RES: usize = 96;

fn fact1(opts: &SuiteOptions, notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rng = rng(opts, 4);
    let mut cases = Vec::new();
    for _ in 0..10 {
        let j = perturbed_warped(&mut rng);
        for beta in [0.5, 1.0] {
            cases.push((j.clone(), beta));
        }
    }
    let results = par_map(&cases, opts.threads, |(j, beta)| {
        let m = MetricField::warped(tt(j), 1.0).map_err(ComparisonError::from)?;
        fact1_check(&m, *beta, Resolution::square(CHAIN_RES))
    });
    let mut rows = Vec::new();
    for ((j, beta), r) in cases.iter().zip(results) {
        let case = format!("J={j} beta={beta}");
        match r {
            Ok(v) => rows.push(ReportRow::check(&case, "slack", v.slack, None, Provenance::Observation, v.slack >= -1e-6)),
            Err(e) => rows.push(fail_row(&case, "slack", notes, e)),
        }
    }
    for beta in [0.5, 1.0] {
        let case = format!("unit disc beta={beta}");
        match fact1_check(&MetricField::disc(1.0), beta, Resolution::square(CHAIN_RES)) {
            Ok(v) => rows.push(ReportRow::near(&case, "|slack|", v.slack.abs(), 0.0, EQUALITY_TOL, Provenance::Derived)),
            Err(e) => rows.push(fail_row(&case, "|slack|", notes, e)),
        }
    }
    rows
}

/// `t + eps t^3 (1 + trig(m theta + s) / 2)`: radial curvature is
/// `-J_tt / J <= 0`, so every `k >= 0` is an admissible bound.
fn admissible_perturbation(rng: &mut ChaCha8Rng) -> (String, f64, f64) {
    let eps: f64 = rng.gen_range(0.02..0.08);
    let m: u32 = rng.gen_range(1..=3);
    let s: f64 = rng.gen_range(0.0..2.0 * PI);
    let trig = TRIG[rng.gen_range(0..2)];
    let k: f64 = rng.gen_range(0.0..0.4);
    let beta = if rng.gen_bool(0.5) { 0.5 } else { 1.0 };
    (format!("t+({eps:.17e})*t^3*(1+0.5*{trig}({m}*theta+({s:.17e})))"), k, beta)
}

fn chain(opts: &SuiteOptions, notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rng = rng(opts, 5);
    let mut cases: Vec<(String, f64, f64)> = (0..5).map(|_| admissible_perturbation(&mut rng)).collect();
    cases.push(("t".to_string(), 0.0, 1.0));
    let res = Resolution::square(CHAIN_RES);
    let results = par_map(&cases, opts.threads, |(j, k, beta)| {
        let m = MetricField::warped(tt(j), 1.0).map_err(ComparisonError::from)?;
        let k = CurvatureProfile::Constant(*k);
        let verdict = wentzell_comparison(&m, &k, *beta, res)?;
        let min = test_function_rq(&m, &k, *beta, res, Truncation::Min, None);
        let max = test_function_rq(&m, &k, *beta, res, Truncation::Max, None);
        let coarse = if min.is_ok() {
            Some(test_function_rq(&m, &k, *beta, Resolution::square(CHAIN_RES / 2), Truncation::Min, None)?)
        } else {
            None
        };
        Ok::<_, ComparisonError>((verdict, min, max, coarse))
    });
    let mut rows = Vec::new();
    for ((j, k, beta), r) in cases.iter().zip(results) {
        let model = j == "t";
        let case = if model { format!("model k={k} beta={beta}") } else { format!("J={j} k={k:.6} beta={beta}") };
        let (verdict, min, max, coarse) = match r {
            Ok(x) => x,
            Err(e) => {
                rows.push(fail_row(&case, "comparison", notes, e));
                continue;
            }
        };
        rows.push(ReportRow::check(&case, "tau1_ball <= tau1_model", verdict.slack, None, Provenance::Observation, verdict.pass));
        if let Ok(b) = &max {
            for (i, s) in b.chain_slacks(*beta).iter().enumerate() {
                rows.push(ReportRow::info(&case, &format!("max-truncation link {}", i + 1), *s));
            }
        }
        match (min, coarse) {
            (Ok(b), Some(c)) => {
                let fine = b.chain_slacks(*beta);
                let coarse = c.chain_slacks(*beta);
                for i in 0..3 {
                    let tol = 1e-6 + (fine[i] - coarse[i]).abs() / 3.0;
                    rows.push(ReportRow::check(&case, &format!("link {}", i + 1), fine[i], None, Provenance::Observation, fine[i] >= -tol));
                }
                if model {
                    let total = b.rq - verdict.rhs;
                    rows.push(ReportRow::near(&case, "rq - tau1_model", total, 0.0, EQUALITY_TOL, Provenance::Derived));
                }
            }
            (Err(ComparisonError::DegenerateTrialFunction { a_min, a_max, max_variant_nontrivial }), _) => {
                notes.push(format!(
                    "{case}: a_+ = min(a, 0) vanishes, a in [{a_min:.4e}, {a_max:.4e}], max variant non-trivial: {max_variant_nontrivial}"
                ));
                rows.push(ReportRow::check(&case, "a_+ non-trivial (a_min)", a_min, Some(0.0), Provenance::Paper, false));
            }
            (Err(e), _) => rows.push(fail_row(&case, "trial function", notes, e)),
            (Ok(_), None) => unreachable!("coarse run follows every successful fine run"),
        }
    }
    rows
}

fn coefficients(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..10).map(|_| rng.gen_range(-scale..scale)).collect()
}

const MONOMIALS: [&str; 10] = ["1", "x", "y", "x^2", "x*y", "y^2", "x^3", "x^2*y", "x*y^2", "y^3"];

fn cubic(c: &[f64]) -> String {
    c.iter().zip(MONOMIALS).map(|(c, m)| format!("({c:.17e})*{m}")).collect::<Vec<_>>().join("+")
}

/// `x^T L L^T x / 2 + b.x` with a random lower-triangular `L`.
fn convex_quadratic(rng: &mut ChaCha8Rng, scale: f64) -> String {
    let l11: f64 = rng.gen_range(0.0..scale);
    let l21: f64 = rng.gen_range(-scale..scale);
    let l22: f64 = rng.gen_range(0.0..scale);
    let b1: f64 = rng.gen_range(-0.5 * scale..0.5 * scale);
    let b2: f64 = rng.gen_range(-0.5 * scale..0.5 * scale);
    let (a, b, c) = (l11 * l11, l11 * l21, l21 * l21 + l22 * l22);
    format!("0.5*(({a:.17e})*x^2+2*({b:.17e})*x*y+({c:.17e})*y^2)+({b1:.17e})*x+({b2:.17e})*y")
}

fn reilly(opts: &SuiteOptions, notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rng = rng(opts, 6);
    let q = Quadrature::new(8);
    let disc = || Patch::Planar(MetricField::disc(1.0));
    let bundles: Vec<(String, String, String)> = (0..25)
        .map(|_| {
            let f = cubic(&coefficients(&mut rng, 1.0));
            let mut v = coefficients(&mut rng, 0.5);
            v[0] += 2.0;
            (f, cubic(&v), convex_quadratic(&mut rng, 1.0))
        })
        .collect();
    let results = par_map(&bundles, opts.threads, |(f, v, phi)| {
        let b = FieldBundle { f: xy(f), v: xy(v), phi: xy(phi), k: 0.3, patch: disc() };
        reilly_general_residual(&b, &q)
    });
    let mut rows = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let case = format!("bundle {i}");
        match r {
            Ok(r) => rows.push(ReportRow::check(&case, "residual", r.residual, Some(0.0), Provenance::Trivial, r.residual < 1e-8)),
            Err(e) => rows.push(fail_row(&case, "residual", notes, e)),
        }
    }
    let saddle = FieldBundle { f: xy("x^2-y^2"), v: xy("1"), phi: xy("0"), k: 0.0, patch: disc() };
    let case = "saddle f=x^2-y^2";
    match reilly_general_residual(&saddle, &q) {
        Ok(g) => {
            rows.push(ReportRow::near(case, "lhs", g.lhs, -8.0 * PI, 1e-10, Provenance::Derived));
            rows.push(ReportRow::near(case, "rhs", g.rhs, -8.0 * PI, 1e-10, Provenance::Derived));
            for (name, d) in [
                ("classical", reilly_classical_residual(&saddle, &q)),
                ("qiu-xia", qiu_xia_residual(&saddle, &q)),
                ("ma-du", ma_du_residual(&saddle, &q)),
            ] {
                match d {
                    Ok(d) => {
                        let a = g.agreement(&d);
                        rows.push(ReportRow::check(case, &format!("agreement {name}"), a, Some(0.0), Provenance::Trivial, a <= 1e-14));
                    }
                    Err(e) => rows.push(fail_row(case, name, notes, e)),
                }
            }
        }
        Err(e) => rows.push(fail_row(case, "lhs", notes, e)),
    }
    rows
}

/// Residual of the discrete identity for the harmonic extension of
/// `sin theta` with weight `phi = x` and the position field.
pub fn pohozaev_fem_residual(n: usize) -> Result<f64, String> {
    let m = MetricField::disc(1.0).with_weight(xy("x")).map_err(|e| e.to_string())?;
    let g = Grid2D::new(&m, n, n).map_err(|e| e.to_string())?;
    let data: Vec<f64> = (0..n).map(|j| g.theta(j).sin()).collect();
    let u = harmonic_extension(&m, &g, &data).map_err(|e| e.to_string())?;
    pohozaev_discrete(&m, &g, &u, &VectorField::position(2), 3).map(|r| r.residual).map_err(|e| e.to_string())
}

fn pohozaev(notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let case = "u=x F=position phi=0";
    let p = Patch::Planar(MetricField::disc(1.0));
    match pohozaev_residual(&p, &xy("0"), &xy("x"), &VectorField::position(2), &Quadrature::default()) {
        Ok(r) => rows.push(ReportRow::check(case, "residual", r.residual, Some(0.0), Provenance::Trivial, r.residual < 1e-10)),
        Err(e) => rows.push(fail_row(case, "residual", notes, e)),
    }
    let case = "fem data=sin(theta) phi=x";
    match (pohozaev_fem_residual(256), pohozaev_fem_residual(512)) {
        (Ok(a), Ok(b)) => {
            rows.push(ReportRow::check(case, "residual 256", a, Some(0.0), Provenance::Trivial, a < 5e-3));
            rows.push(ReportRow::check(case, "residual 512", b, Some(0.5 * a), Provenance::Trivial, b <= 0.5 * a));
        }
        (Err(e), _) | (_, Err(e)) => rows.push(fail_row(case, "residual", notes, e)),
    }
    rows
}

/// Ellipse with semi-axes `a`, `b` rotated by `alpha`, as `R(theta)`.
fn ellipse(a: f64, b: f64, alpha: f64) -> String {
    format!("1/sqrt(cos(theta-({alpha:.17e}))^2/({:.17e})+sin(theta-({alpha:.17e}))^2/({:.17e}))", a * a, b * b)
}

fn lower_bounds(opts: &SuiteOptions, notes: &mut Vec<String>) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let zero = xy("0");
    let case = "unit disc phi=0 c=1";
    match steklov_lower_bound_check(&MetricField::disc(1.0), &zero, 1.0, Resolution::square(128), 2e-3) {
        Ok(v) => rows.push(ReportRow::near(case, "sigma1", v.rhs, 1.0, 2e-3, Provenance::Paper)),
        Err(e) => rows.push(fail_row(case, "sigma1", notes, e)),
    }
    let mut rng = rng(opts, 8);
    let domains: Vec<(String, String)> = (0..5)
        .map(|_| {
            let a: f64 = rng.gen_range(0.8..1.25);
            let b: f64 = rng.gen_range(0.8..1.25);
            let alpha: f64 = rng.gen_range(0.0..PI);
            (ellipse(a, b, alpha), convex_quadratic(&mut rng, 0.7))
        })
        .collect();
    let res = Resolution::square(64);
    let results = par_map(&domains, opts.threads, |(r, phi)| {
        let d = MetricField::pullback(Expr::parse(r, &["theta"]).expect("generated")).map_err(ComparisonError::from)?;
        let c = boundary_geometry(&d, res.n_theta)?.kappa_g.into_iter().fold(f64::INFINITY, f64::min);
        steklov_lower_bound_check(&d, &xy(phi), c, res, 1e-3).map(|v| (c, v))
    });
    for ((r, phi), out) in domains.iter().zip(results) {
        let case = format!("R={r} phi={phi}");
        match out {
            Ok((c, v)) => rows.push(ReportRow::check(&case, "sigma1", v.rhs, Some(c), Provenance::Paper, v.rhs >= c - 1e-3)),
            Err(e) => rows.push(fail_row(&case, "sigma1", notes, e)),
        }
    }
    let battery: [(f64, &str, f64); 4] =
        [(1.0, "(x^2+y^2)/2", 0.9), (1.0, "0", 1.0 - 1e-6), (1.0, "0.3*(x^2+y^2)+0.1*x", 0.9), (2.0, "(x^2+y^2)/4", 0.45)];
    for (radius, phi, c) in battery {
        let case = format!("disc r={radius} phi={phi} c={c}");
        match escobar_half_bound_check(&MetricField::disc(radius), &xy(phi), c, res, 1e-6) {
            Ok(v) => rows.push(ReportRow::check(&case, "sigma1", v.rhs, Some(c / 2.0), Provenance::Paper, v.rhs > c / 2.0)),
            Err(e) => rows.push(fail_row(&case, "sigma1", notes, e)),
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_fields_are_well_formed() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let phi = xy(&convex_quadratic(&mut r, 1.0));
            let j = phi.eval_jet2(&[0.3, -0.2]).unwrap();
            let (a, b, c) = (j.hess(0, 0), j.hess(0, 1), j.hess(1, 1));
            assert!(a >= -1e-15 && c >= -1e-15 && a * c - b * b >= -1e-12);
            let w = perturbed_warped(&mut r);
            let e = tt(&w);
            assert!(e.eval(&[0.5, 1.0]).unwrap() > 0.0, "{w}");
            let (p, _, _) = admissible_perturbation(&mut r);
            let jet = tt(&p).eval_jet2(&[0.7, 2.0]).unwrap();
            assert!(jet.hess(0, 0) >= 0.0);
        }
        let e = Expr::parse(&ellipse(1.0, 1.2, 0.0), &["theta"]).unwrap();
        assert!((e.eval(&[PI / 2.0]).unwrap() - 1.2).abs() < 1e-14);
    }

    #[test]
    fn warping_criterion() {
        let c = criterion(1, &SuiteOptions::default());
        assert!(c.rows.iter().all(|r| r.pass == Some(true)), "{}", c.line());
    }
}
