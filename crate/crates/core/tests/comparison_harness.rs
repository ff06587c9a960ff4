use speclab_core::comparisons::{
    escobar_half_bound_check, fact1_check, steklov_lower_bound_check, test_function_rq, wentzell_comparison,
    ComparisonError, Resolution, Truncation,
};
use speclab_core::expr::Expr;
use speclab_core::geom::{boundary_geometry, MetricField};
use speclab_core::warp::CurvatureProfile;

fn xy(s: &str) -> Expr {
    Expr::parse(s, &["x", "y"]).unwrap()
}

fn warped(j: &str, r: f64) -> MetricField {
    MetricField::warped(Expr::parse(j, &["t", "theta"]).unwrap(), r).unwrap()
}

#[test]
fn fact1_on_perturbed_metrics() {
    for (j, beta) in [
        ("t*(1+0.1*t^2*cos(2*theta))", 0.5),
        ("t*(1+0.08*t^2*sin(3*theta))", 1.0),
        ("sin(t)*(1+0.05*t^2*cos(theta))", 0.5),
    ] {
        let v = fact1_check(&warped(j, 1.0), beta, Resolution::square(48)).unwrap();
        assert!(v.pass && v.slack >= -1e-6, "{j}: {v:?}");
    }
}

#[test]
fn comparison_against_a_positive_curvature_model() {
    let m = warped("t + 0.05*t^3*(1+0.5*cos(2*theta))", 1.0);
    let v = wentzell_comparison(&m, &CurvatureProfile::Constant(0.35), 1.0, Resolution::square(48)).unwrap();
    assert!(v.pass, "{v:?}");
    // Steklov and closed comparisons read off the same run.
    assert!(v.quantity("p1_ball").unwrap() <= v.quantity("p1_model").unwrap() + 1e-6);
    assert!(v.quantity("lambda1_closed_ball").unwrap() <= v.quantity("lambda1_closed_model").unwrap() + 1e-6);
    let a = v.quantity("tau1_ball").unwrap();
    let b = wentzell_comparison(&m, &CurvatureProfile::Constant(0.35), 1.0, Resolution::square(48)).unwrap();
    assert_eq!(a.to_bits(), b.quantity("tau1_ball").unwrap().to_bits());
}

#[test]
fn trial_function_as_written_is_trivial() {
    let m = warped("t + 0.05*t^3*(1+0.5*cos(2*theta))", 1.0);
    let e = test_function_rq(&m, &CurvatureProfile::Constant(0.35), 1.0, Resolution::square(32), Truncation::Min, None)
        .unwrap_err();
    let ComparisonError::DegenerateTrialFunction { a_min, max_variant_nontrivial, .. } = e else { panic!("{e:?}") };
    assert!(a_min > 0.0 && max_variant_nontrivial);
    let b = test_function_rq(&m, &CurvatureProfile::Constant(0.35), 1.0, Resolution::square(32), Truncation::Max, None)
        .unwrap();
    // Any non-zero grid function is admissible, so the first link holds.
    assert!(b.chain_slacks(1.0)[0] >= -1e-9);
    assert!(b.chain_slacks(1.0)[2] >= -1e-6);
}

#[test]
fn lower_bound_scales_with_the_domain() {
    let zero = xy("0");
    let one = steklov_lower_bound_check(&MetricField::disc(1.0), &zero, 1.0, Resolution::square(64), 2e-3).unwrap();
    let two = steklov_lower_bound_check(&MetricField::disc(2.0), &zero, 0.5, Resolution::square(64), 1e-3).unwrap();
    assert!(one.pass && two.pass);
    assert!((one.rhs - 2.0 * two.rhs).abs() < 1e-10, "{} {}", one.rhs, two.rhs);
}

#[test]
fn ellipse_with_convex_weight() {
    let ell = MetricField::pullback(Expr::parse("1/sqrt(cos(theta)^2 + sin(theta)^2/1.44)", &["theta"]).unwrap()).unwrap();
    let c = boundary_geometry(&ell, 64).unwrap().kappa_g.into_iter().fold(f64::INFINITY, f64::min);
    let v = steklov_lower_bound_check(&ell, &xy("x^2/8+y^2/8"), c, Resolution::square(64), 1e-3).unwrap();
    assert!(v.pass && v.rhs >= c - 1e-3, "{v:?}");
    let e = steklov_lower_bound_check(&ell, &xy("0"), 1.0, Resolution::square(16), 1e-3).unwrap_err();
    assert!(matches!(e, ComparisonError::Precondition(ref p) if p.name == "boundary curvature at least c"));
}

#[test]
fn escobar_on_weighted_discs() {
    let v = escobar_half_bound_check(&MetricField::disc(1.0), &xy("(x^2+y^2)/2"), 0.9, Resolution::square(64), 1e-6).unwrap();
    assert!(v.pass && v.rhs > 0.45, "{v:?}");
    let v = escobar_half_bound_check(&MetricField::disc(1.0), &xy("0"), 1.0 - 1e-6, Resolution::square(64), 1e-6).unwrap();
    assert!(v.pass && (v.rhs - 1.0).abs() < 2e-3);
    // phi = -x/2 - y/2 is convex but lowers kappa + phi_eta below c.
    let e = escobar_half_bound_check(&MetricField::disc(1.0), &xy("-x/2-y/2"), 0.9, Resolution::square(16), 1e-6)
        .unwrap_err();
    assert!(matches!(e, ComparisonError::Precondition(ref p) if p.name.starts_with("H^phi")), "{e:?}");
}
