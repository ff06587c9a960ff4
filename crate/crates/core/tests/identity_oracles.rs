use std::f64::consts::PI;

use proptest::prelude::*;
use speclab_core::expr::Expr;
use speclab_core::fem::{harmonic_extension, Grid2D};
use speclab_core::geom::MetricField;
use speclab_core::identities::{
    ma_du_residual, pohozaev_discrete, pohozaev_residual, qiu_xia_residual, reilly_classical_residual,
    reilly_general_residual, FieldBundle, Patch, Quadrature, VectorField,
};

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*seed >> 11) as f64 / (1u64 << 53) as f64
}

const MONOMIALS: [&str; 10] = ["1", "x", "y", "x^2", "x*y", "y^2", "x^3", "x^2*y", "x*y^2", "y^3"];

fn cubic(coef: &[f64]) -> Expr {
    let text: Vec<String> = coef.iter().zip(MONOMIALS).map(|(c, m)| format!("({c:.17e})*{m}")).collect();
    Expr::parse(&text.join("+"), &["x", "y"]).unwrap()
}

fn convex_quadratic(seed: &mut u64) -> Expr {
    // A = L L^T is positive semi-definite.
    let (a, b, c) = (lcg(seed), lcg(seed) - 0.5, lcg(seed));
    let (d, e) = (lcg(seed) - 0.5, lcg(seed) - 0.5);
    let text = format!(
        "0.5*({:.17e}*x^2 + 2*{:.17e}*x*y + {:.17e}*y^2) + {d:.17e}*x + {e:.17e}*y",
        a * a,
        a * b,
        b * b + c * c
    );
    Expr::parse(&text, &["x", "y"]).unwrap()
}

fn random_bundle(seed: u64) -> FieldBundle {
    let mut s = seed;
    let f: Vec<f64> = (0..10).map(|_| 2.0 * lcg(&mut s) - 1.0).collect();
    let mut v: Vec<f64> = (0..10).map(|_| lcg(&mut s) - 0.5).collect();
    v[0] += 2.0;
    FieldBundle { f: cubic(&f), v: cubic(&v), phi: convex_quadratic(&mut s), k: 0.3, patch: Patch::Planar(MetricField::disc(1.0)) }
}

fn xy(s: &str) -> Expr {
    Expr::parse(s, &["x", "y"]).unwrap()
}

#[test]
fn twenty_five_random_bundles() {
    let q = Quadrature::new(8);
    for seed in 0..25 {
        let r = reilly_general_residual(&random_bundle(seed), &q).unwrap();
        assert!(r.residual < 1e-8, "seed {seed}: {r:?}");
        assert!(r.lhs.abs() > 1e-3, "seed {seed}: trivial bundle");
    }
}

#[test]
fn residual_follows_the_quadrature_error() {
    // A non-polynomial f makes both sides inexact at low order.
    let b = FieldBundle {
        f: xy("exp(x/2)*sin(y)+x^3"),
        v: xy("2+x*y"),
        phi: xy("(x^2+y^2)/3"),
        k: 0.3,
        patch: Patch::Planar(MetricField::disc(1.0)),
    };
    let low = reilly_general_residual(&b, &Quadrature::new(3)).unwrap();
    let high = reilly_general_residual(&b, &Quadrature::new(6)).unwrap();
    assert!(high.residual * 1e2 <= low.residual, "{} {}", low.residual, high.residual);
}

#[test]
fn saddle_matches_hand_values() {
    let b = FieldBundle { f: xy("x^2-y^2"), v: xy("1"), phi: xy("0"), k: 0.0, patch: Patch::Planar(MetricField::disc(1.0)) };
    let q = Quadrature::default();
    let r = reilly_general_residual(&b, &q).unwrap();
    assert!((r.lhs + 8.0 * PI).abs() < 1e-10);
    assert!((r.rhs + 8.0 * PI).abs() < 1e-10);
    // Hand split of the boundary side: 2u Lbar z, H u^2 and II |Dz|^2.
    assert!((r.term("2Vu Lbar z").unwrap() + 16.0 * PI).abs() < 1e-10);
    assert!((r.term("(n-1)V H_phi u^2").unwrap() - 4.0 * PI).abs() < 1e-10);
    assert!((r.term("V II(Dz,Dz)").unwrap() - 4.0 * PI).abs() < 1e-10);
    for other in [reilly_classical_residual(&b, &q), qiu_xia_residual(&b, &q), ma_du_residual(&b, &q)] {
        assert!(r.agreement(&other.unwrap()) <= 1e-14);
    }
    let stressed = r.residual_with_rhs_term_negated("V II(Dz,Dz)").unwrap();
    assert!(stressed > 1e-2, "{stressed}");
}

#[test]
fn spherical_cap_classical() {
    let j = Expr::parse("sin(t)", &["t", "theta"]).unwrap();
    let patch = Patch::Warped(MetricField::warped(j, PI / 4.0).unwrap());
    let tt = |s: &str| Expr::parse(s, &["t", "theta"]).unwrap();
    let b = FieldBundle { f: tt("t^2 - t^3/3 + 0.2*t^2*cos(theta)"), v: tt("1"), phi: tt("0"), k: 0.0, patch };
    let q = Quadrature { order: 8, refinement: 2, hole: 0.0 };
    let r = reilly_classical_residual(&b, &q).unwrap();
    assert!(r.residual < 1e-7, "{r:?}");
    let g = reilly_general_residual(&b, &q).unwrap();
    assert!(r.agreement(&g) <= 1e-14);
    // On the sphere Ric = g, so the curvature term is active.
    assert!(r.term("-Ric(Df,Df)").unwrap().abs() > 1e-2);
}

#[test]
fn qiu_xia_disc() {
    let mut s = 77;
    let f: Vec<f64> = (0..10).map(|_| 2.0 * lcg(&mut s) - 1.0).collect();
    let b = FieldBundle { f: cubic(&f), v: xy("1-(x^2+y^2)/2"), phi: xy("0"), k: 0.5, patch: Patch::Planar(MetricField::disc(1.0)) };
    let q = Quadrature::new(8);
    let r = qiu_xia_residual(&b, &q).unwrap();
    assert!(r.residual < 1e-8, "{r:?}");
    assert!(r.agreement(&reilly_general_residual(&b, &q).unwrap()) <= 1e-14);
}

#[test]
fn ma_du_disc() {
    let q = Quadrature::new(8);
    let b = FieldBundle { f: xy("x^2-y^2"), v: xy("1"), phi: xy("x"), k: 0.0, patch: Patch::Planar(MetricField::disc(1.0)) };
    let r = ma_du_residual(&b, &q).unwrap();
    assert!(r.residual < 1e-8, "{r:?}");
    assert!(r.agreement(&reilly_general_residual(&b, &q).unwrap()) <= 1e-14);
    let flat = FieldBundle { phi: xy("0"), ..b };
    let a = ma_du_residual(&flat, &q).unwrap();
    let c = reilly_classical_residual(&flat, &q).unwrap();
    assert_eq!(a.lhs, c.lhs);
    assert_eq!(a.rhs, c.rhs);
}

#[test]
fn ellipse_and_ball() {
    let r = Expr::parse("1/sqrt(cos(theta)^2 + sin(theta)^2/1.44)", &["theta"]).unwrap();
    let patch = Patch::Planar(MetricField::pullback(r).unwrap());
    let b = FieldBundle { f: xy("x^3-x*y+y^2"), v: xy("1+x^2"), phi: xy("x^2/4+y^2/8"), k: 0.2, patch };
    let rep = reilly_general_residual(&b, &Quadrature { order: 10, refinement: 3, hole: 0.0 }).unwrap();
    assert!(rep.residual < 1e-9, "{rep:?}");

    let xyz = |s: &str| Expr::parse(s, &["x", "y", "z"]).unwrap();
    let b = FieldBundle {
        f: xyz("x*y - z^2 + x^3"),
        v: xyz("2 + z"),
        phi: xyz("(x^2+y^2+z^2)/4"),
        k: 0.3,
        patch: Patch::Ball3 { radius: 1.5 },
    };
    let rep = reilly_general_residual(&b, &Quadrature::new(8)).unwrap();
    assert!(rep.residual < 1e-9, "{rep:?}");
}

#[test]
fn pohozaev_analytic() {
    let p = Patch::Planar(MetricField::disc(1.0));
    let q = Quadrature::default();
    let r = pohozaev_residual(&p, &xy("0"), &xy("x"), &VectorField::position(2), &q).unwrap();
    assert!(r.residual < 1e-10);
    let c = pohozaev_residual(&p, &xy("0"), &xy("3"), &VectorField(vec![xy("y^2"), xy("sin(x)")]), &q).unwrap();
    assert_eq!((c.boundary, c.interior), (0.0, 0.0));
    // u = x, F = (x^3, 0): boundary side int cos^4 - cos^4/2 = 3 pi / 8, and
    // interior side int (3x^2 - 3x^2/2) = 3 pi / 8.
    let f = VectorField(vec![xy("x^3"), xy("0")]);
    let r = pohozaev_residual(&p, &xy("0"), &xy("x"), &f, &q).unwrap();
    assert!((r.boundary - 3.0 * PI / 8.0).abs() < 1e-12, "{r:?}");
    assert!((r.interior - 3.0 * PI / 8.0).abs() < 1e-12, "{r:?}");
    // e^x is harmonic for the drift of phi = x.
    let r = pohozaev_residual(&p, &xy("x"), &xy("exp(x)"), &f, &q).unwrap();
    assert!(r.boundary.abs() > 1e-1 && r.residual < 1e-12, "{r:?}");
}

fn discrete_pohozaev(n: usize, mode: f64) -> f64 {
    let m = MetricField::disc(1.0).with_weight(xy("x")).unwrap();
    let g = Grid2D::new(&m, n, n).unwrap();
    let data: Vec<f64> = (0..n).map(|j| (mode * g.theta(j)).sin() + 0.3 * (mode * g.theta(j)).cos()).collect();
    let u = harmonic_extension(&m, &g, &data).unwrap();
    pohozaev_discrete(&m, &g, &u, &VectorField::position(2), 3).unwrap().residual
}

#[test]
fn pohozaev_discrete_small_at_256() {
    let r = discrete_pohozaev(256, 1.0);
    assert!(r < 5e-3, "{r}");
}

#[test]
fn pohozaev_discrete_converges_for_higher_modes() {
    let errs: Vec<f64> = [32, 64, 128].iter().map(|&n| discrete_pohozaev(n, 2.0)).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 0.5 * w[0], "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ledger_recomposes(seed in 0u64..1_000_000) {
        let r = reilly_general_residual(&random_bundle(seed), &Quadrature::new(8)).unwrap();
        let l: f64 = r.lhs_terms.iter().map(|t| t.1).sum();
        let s: f64 = r.rhs_terms.iter().map(|t| t.1).sum();
        prop_assert!((l - r.lhs).abs() <= 1e-12 * (1.0 + r.lhs.abs()));
        prop_assert!((s - r.rhs).abs() <= 1e-12 * (1.0 + r.rhs.abs()));
        prop_assert!(r.residual < 1e-8);
    }

    #[test]
    fn classical_degeneration(c in proptest::collection::vec(-1.0f64..1.0, 10)) {
        let b = FieldBundle { f: cubic(&c), v: xy("1"), phi: xy("0"), k: 0.0, patch: Patch::Planar(MetricField::disc(1.0)) };
        let q = Quadrature::new(6);
        let g = reilly_general_residual(&b, &q).unwrap();
        let cl = reilly_classical_residual(&b, &q).unwrap();
        prop_assert!(g.agreement(&cl) <= 1e-14);
        prop_assert!(cl.residual < 1e-10);
    }
}
