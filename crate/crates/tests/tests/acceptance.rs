//! The acceptance criteria, one test each. Every test writes a single
//! PASS/FAIL line straight to stderr (so it shows without `--nocapture`)
//! and then asserts the verdict.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;

use speclab::suite::{battery_csv, criterion, CriterionResult, SuiteOptions};
use speclab::ReportRow;
use speclab_core::warp::{solve_warping, CurvatureProfile};

// Runtime limits are part of the criteria, so the tests run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn run(id: u8) -> CriterionResult {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let c = criterion(id, &SuiteOptions::default());
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", c.line());
    for n in &c.notes {
        let _ = writeln!(err, "    {n}");
    }
    c
}

fn row<'a>(c: &'a CriterionResult, case: &str, quantity: &str) -> &'a ReportRow {
    c.rows.iter().find(|r| r.case == case && r.quantity == quantity).unwrap_or_else(|| panic!("{case}/{quantity}"))
}

#[test]
fn criterion_1_warping_closed_forms() {
    let c = run(1);
    // Independent check on the same nodes.
    for (k, exact) in [(0.0, (|t: f64| t) as fn(f64) -> f64), (1.0, f64::sin), (-1.0, f64::sinh)] {
        let s = solve_warping(CurvatureProfile::Constant(k), 4.0, 1e-10).unwrap();
        let end = s.l_pos.unwrap_or(3.0).min(3.0);
        let worst = s.grid.iter().zip(&s.f).filter(|(t, _)| **t < end).map(|(t, f)| (f - exact(*t)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "k = {k}: {worst}");
        assert_eq!(worst, row(&c, &format!("k={k}"), "max_node_error").value);
    }
    assert_eq!(row(&c, "k=1", "l_pos").reference, Some(PI));
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_2_disc_steklov_spectrum() {
    let c = run(2);
    // p_l = l / R on the disc, each l >= 1 twice.
    let expected: Vec<f64> = (1..=3).flat_map(|l| [l as f64; 2]).take(5).collect();
    for (i, e) in expected.iter().enumerate() {
        assert_eq!(row(&c, "unit disc 256x256", &format!("p{}", i + 1)).reference, Some(*e));
    }
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_3_wentzell_separation() {
    let c = run(3);
    for b in [0.0, 0.25, 0.5, 1.0] {
        // cos theta: p = 1, rim Laplacian eigenvalue 1.
        assert_eq!(row(&c, "unit disc 128x128", &format!("tau1 beta={b}")).reference, Some(1.0 + b));
    }
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_4_fact1() {
    let c = run(4);
    assert_eq!(c.rows.iter().filter(|r| r.quantity == "slack").count(), 20);
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_5_comparison_chain() {
    let c = run(5);
    assert!(c.rows.iter().filter(|r| r.quantity == "tau1_ball <= tau1_model").count() == 6);
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_6_reilly() {
    let c = run(6);
    assert_eq!(c.rows.iter().filter(|r| r.case.starts_with("bundle ")).count(), 25);
    assert_eq!(row(&c, "saddle f=x^2-y^2", "lhs").reference, Some(-8.0 * PI));
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_7_pohozaev() {
    let c = run(7);
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_8_lower_bounds() {
    let c = run(8);
    assert_eq!(row(&c, "unit disc phi=0 c=1", "sigma1").reference, Some(1.0));
    assert!(c.pass(), "{}", c.line());
}

#[test]
fn criterion_9_determinism() {
    let c = run(9);
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let other_seed = SuiteOptions { seed: 43, threads: 2 };
    assert_eq!(battery_csv(&other_seed), battery_csv(&SuiteOptions { threads: 1, ..other_seed }));
    assert!(c.pass(), "{}", c.line());
}
