use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{catenoid, jorge_meeks, twin_pole, twin_pole_map};
use crate::gauss_map::fujimori_map;
use crate::period_solver::{perturb_to_maxface, SolverOptions};
use crate::rational::{PointExt, RationalFn};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Catenoid immersion from the antiderivatives `z - 1/z`, `-i (z + 1/z)`,
/// `-2 log z`, anchored at 1.
fn catenoid_closed_form(z: Complex64) -> [f64; 3] {
    let i = c(0.0, 1.0);
    [
        (z - z.inv()).re,
        (-i * (z + z.inv()) + i * 2.0).re,
        -2.0 * z.norm().ln(),
    ]
}

fn close3(a: SurfacePoint, b: [f64; 3], tol: f64) -> bool {
    a.as_array().iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn arc(from: f64, to: f64, r: f64, n: usize) -> Vec<Complex64> {
    (1..n).map(|k| Complex64::from_polar(r, from + (to - from) * k as f64 / n as f64)).collect()
}

#[test]
fn catenoid_base_point_maps_to_origin() {
    let x = evaluate_immersion(&catenoid(), c(1.0, 0.0), &[]).unwrap();
    assert_eq!(x, SurfacePoint::origin());
}

#[test]
fn catenoid_matches_closed_form() {
    let d = catenoid();
    for z in [c(2.0, 0.0), c(1.5, 1.0), c(-0.5, 0.6), c(3.0, -2.0)] {
        let via = if z.re < 0.0 { vec![c(1.0, 1.0), c(0.0, 1.0)] } else { vec![] };
        let x = evaluate_immersion(&d, z, &via).unwrap();
        assert!(close3(x, catenoid_closed_form(z), 1e-9), "{z}: {x:?}");
        // x1^2 + x2^2 = 4 sinh^2(x3 / 2)
        let lhs = x.x1 * x.x1 + x.x2 * x.x2;
        let rhs = 4.0 * (x.x3 / 2.0).sinh().powi(2);
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }
}

#[test]
fn catenoid_unit_circle_closes() {
    let d = catenoid();
    let round = evaluate_immersion(&d, c(1.0, 0.0), &arc(0.0, 2.0 * PI, 1.0, 64)).unwrap();
    assert!(close3(round, [0.0, 0.0, 0.0], 1e-9), "{round:?}");
}

#[test]
fn homotopic_paths_agree() {
    let d = twin_pole();
    let target = c(0.5, 1.5);
    let a = evaluate_immersion(&d, target, &[c(2.0, 1.5)]).unwrap();
    let b = evaluate_immersion(&d, target, &[c(1.2, 0.0), c(1.2, 0.7)]).unwrap();
    assert!(close3(a, b.as_array(), 1e-8), "{a:?} vs {b:?}");
}

#[test]
fn path_near_puncture_is_rejected() {
    let err = evaluate_immersion(&catenoid(), c(-1.0, 0.0), &[]).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(m) if m.contains("passes within")));
}

#[test]
fn metric_factor_examples() {
    let d = catenoid();
    assert!((metric_factor(&d, c(2.0, 0.0)).unwrap() - 0.75).abs() < 1e-15);
    assert_eq!(metric_factor(&d, c(0.0, 1.0)).unwrap(), 0.0);
    let flat = WeierstrassData::new(
        RationalFn::identity().scale(c(-1.0, 0.0)),
        RationalFn::constant(c(1.0, 0.0)),
        vec![PointExt::Infinity],
        c(0.5, 0.0),
    )
    .unwrap();
    assert_eq!(metric_factor(&flat, c(0.0, 0.0)).unwrap(), 1.0);
    assert!(matches!(metric_factor(&d, c(0.0, 0.0)), Err(Error::InvalidInput(_))));
}

/// `\oint` by an independent 2048-point trapezoid rule.
fn oracle_loop(d: &WeierstrassData, center: Complex64, r: f64) -> [Complex64; 3] {
    let n = 2048;
    let mut acc = [c(0.0, 0.0); 3];
    for k in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let v = d.integrands(center + e * r);
        for i in 0..3 {
            acc[i] += v[i] * e * r * c(0.0, 2.0 * PI / n as f64);
        }
    }
    acc
}

#[test]
fn catenoid_periods() {
    let d = catenoid();
    let res = verify_periods(&d, 1e-9).unwrap();
    assert_eq!(res.len(), 2);
    for r in &res {
        assert!(r.max() <= 1e-12, "{r:?}");
    }
    let at0 = &res[0];
    assert_eq!(at0.puncture, PointExt::finite(0.0, 0.0));
    assert!((at0.integral[2] - c(0.0, -4.0 * PI)).norm() < 1e-12);
    let o = oracle_loop(&d, c(0.0, 0.0), at0.radius);
    assert!((o[2] - at0.integral[2]).norm() < 1e-10);
}

#[test]
fn twin_pole_periods_vanish() {
    let d = twin_pole();
    let res = verify_periods(&d, 1e-9).unwrap();
    for r in &res {
        assert!(r.max() <= 1e-9, "{r:?}");
    }
    let o = oracle_loop(&d, c(0.0, 0.0), res[0].radius);
    assert!(o.iter().all(|v| v.re.abs() <= 1e-9));
}

#[test]
fn log_form_fails_period_check() {
    let d = WeierstrassData::new(
        RationalFn::zero(),
        RationalFn::inverse_power(c(0.0, 0.0), 1),
        vec![PointExt::finite(0.0, 0.0), PointExt::Infinity],
        c(1.0, 0.0),
    )
    .unwrap();
    let res = verify_periods(&d, 1e-9).unwrap();
    assert!(res[0].residual[0] < 1e-12);
    assert!((res[0].residual[1] - 2.0 * PI).abs() < 1e-10);
    let rep = verify(&d, &VerifyOptions::default()).unwrap();
    assert!(!rep.periods_ok && !rep.passed);
}

#[test]
fn divisor_condition_examples() {
    assert!(check_divisor_condition(&catenoid()).unwrap().ok);
    let twin = check_divisor_condition(&twin_pole()).unwrap();
    assert!(!twin.ok);
    assert_eq!(twin.witnesses.len(), 4);
    for w in &twin.witnesses {
        let z = w.point.as_finite().unwrap();
        assert!((z.powi(4) - z * z + 1.0).norm() < 1e-12);
        assert_eq!((w.omega_order, w.g_pole_order), (1, 0));
    }
}

#[test]
fn divisor_condition_after_perturbation() {
    let d = twin_pole();
    let out = perturb_to_maxface(&d.g, &d.omega, 0.1, &SolverOptions::default()).unwrap();
    let mut punctures = d.punctures.clone();
    punctures.extend(out.new_ends.iter().map(|&z| PointExt::Finite(z)));
    let p = WeierstrassData::new(out.g_tilde, d.omega.clone(), punctures, d.base_point).unwrap();
    assert!(check_divisor_condition(&p).unwrap().ok);
}

#[test]
fn end_classification_examples() {
    let cat = classify_end(&catenoid(), PointExt::finite(0.0, 0.0)).unwrap();
    assert!(cat.complete && cat.abs_g == 0.0 && cat.order_omega == -2);
    let inf = classify_end(&twin_pole(), PointExt::Infinity).unwrap();
    assert!(inf.complete && inf.abs_g.is_infinite());
    assert_eq!(inf.order_g2omega, Some(-6));
    assert_eq!(inf.dominant_order, Some(-6));
    let flat = WeierstrassData::new(
        RationalFn::zero(),
        RationalFn::constant(c(1.0, 0.0)),
        vec![PointExt::finite(0.0, 0.0), PointExt::Infinity],
        c(1.0, 0.0),
    )
    .unwrap();
    let e = classify_end(&flat, PointExt::finite(0.0, 0.0)).unwrap();
    assert!(!e.complete);
    assert_eq!(e.dominant_order, Some(0));
    assert!(matches!(classify_end(&flat, PointExt::finite(1.0, 1.0)), Err(Error::InvalidInput(_))));
}

#[test]
fn light_like_end_is_incomplete() {
    // |g(-1)| = 1
    let g = RationalFn::identity().add(&RationalFn::constant(c(2.0, 0.0)));
    let d = WeierstrassData::new(
        g,
        RationalFn::inverse_power(c(-1.0, 0.0), 2),
        vec![PointExt::finite(-1.0, 0.0), PointExt::Infinity],
        c(1.0, 0.0),
    )
    .unwrap();
    let e = classify_end(&d, PointExt::finite(-1.0, 0.0)).unwrap();
    assert!(!e.complete);
    assert_eq!(e.reason.as_deref(), Some("light-like limit at end"));
}

#[test]
fn compactness_examples() {
    assert!(singular_set_compactness(&twin_pole()).ok);
    assert!(singular_set_compactness(&catenoid()).ok);
    let jm = singular_set_compactness(&jorge_meeks());
    assert!(!jm.ok);
    assert_eq!(jm.failures.len(), 3);
}

#[test]
fn jorge_meeks_has_light_like_ends() {
    let rep = verify(&jorge_meeks(), &VerifyOptions::default()).unwrap();
    assert!(rep.periods_ok, "{:?}", rep.period_residuals);
    assert!(rep.divisor_ok);
    assert!(rep.ends.iter().all(|e| !e.complete && (e.abs_g - 1.0).abs() < 1e-12));
    assert_eq!(rep.failed_checks(), ["completeness", "compactness"]);
}

#[test]
fn catenoid_and_twin_pole_reports() {
    let rep = verify(&catenoid(), &VerifyOptions::default()).unwrap();
    assert!(rep.passed, "{rep:?}");
    let rep = verify(&twin_pole(), &VerifyOptions::default()).unwrap();
    assert_eq!(rep.failed_checks(), ["divisor"]);
    assert_eq!(rep.branch_points.len(), 4);
}

#[test]
fn data_validation() {
    let g = RationalFn::identity();
    let f = RationalFn::inverse_power(c(0.0, 0.0), 2);
    let dup = vec![PointExt::finite(0.0, 0.0), PointExt::finite(0.0, 0.0)];
    assert!(WeierstrassData::new(g.clone(), f.clone(), dup, c(1.0, 0.0)).is_err());
    let unimodular = RationalFn::constant(Complex64::from_polar(1.0, 0.3));
    assert!(WeierstrassData::new(unimodular, f.clone(), vec![PointExt::Infinity], c(1.0, 0.0)).is_err());
    // pole of g at infinity inside the domain with omega = dz^... of order 0
    let inner = WeierstrassData::new(g.clone(), f.clone(), vec![PointExt::finite(0.0, 0.0)], c(1.0, 0.0));
    assert!(matches!(inner, Err(Error::InvalidInput(m)) if m.contains("inside the domain")));
    let base = WeierstrassData::new(g, f, vec![PointExt::finite(0.0, 0.0), PointExt::Infinity], c(0.0, 0.0));
    assert!(base.is_err());
}

#[test]
fn data_json_round_trip() {
    let d = jorge_meeks();
    let s = serde_json::to_string(&d).unwrap();
    assert!(s.starts_with(r#"{"g":"#) && s.contains(r#""base_point":[0.0,0.0]"#));
    let back: WeierstrassData = serde_json::from_str(&s).unwrap();
    assert_eq!(back.g, d.g);
    assert_eq!(back.punctures.len(), 3);
    let cat = serde_json::to_value(catenoid()).unwrap();
    assert_eq!(cat["punctures"], serde_json::json!([[0.0, 0.0], "inf"]));
    let end = serde_json::to_value(classify_end(&twin_pole(), PointExt::Infinity).unwrap()).unwrap();
    assert_eq!(end["abs_g"], "inf");
}

#[test]
fn unit_circle_extraction() {
    let g = RationalFn::identity().scale(c(-1.0, 0.0));
    let lines = singular_curve_extract(&g, &Window::square(2.0), 256).unwrap();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].closed);
    for z in &lines[0].points {
        assert!((z.norm() - 1.0).abs() <= 0.02);
    }
    // every direction is reached
    for k in 0..64 {
        let dir = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
        assert!(lines[0].points.iter().any(|z| (z - dir).norm() <= 0.02));
    }
}

#[test]
fn twin_pole_curve_vertices_on_locus() {
    let g = twin_pole_map();
    let lines = singular_curve_extract(&g, &Window::square(3.0), 128).unwrap();
    assert!(!lines.is_empty());
    let d = twin_pole();
    for l in &lines {
        for &z in &l.points {
            assert!((g.eval(z).norm() - 1.0).abs() <= 0.01);
            assert!(metric_factor(&d, z).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn fujimori_has_three_circles() {
    let g = fujimori_map();
    let comps = singular_components(&g, &Window::square(4.0), 512).unwrap();
    assert_eq!(comps.len(), 3, "{:?}", comps.iter().map(|c| (c.pieces.len(), c.closed)).collect::<Vec<_>>());
    assert!(comps.iter().all(|c| c.closed));
    assert_eq!(comps.iter().filter(|c| c.leaves_window).count(), 1);
    for t in [0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
        assert!((g.eval(c(0.0, t)).norm() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn extraction_arguments() {
    let g = RationalFn::identity();
    assert!(singular_curve_extract(&g, &Window::square(1.0), 8).is_err());
    assert!("0,1,2".parse::<Window>().is_err());
    assert!("1,0,0,1".parse::<Window>().is_err());
    assert_eq!("-1,1,-2,2".parse::<Window>().unwrap(), Window::new(-1.0, 1.0, -2.0, 2.0).unwrap());
    let none = singular_curve_extract(&g, &Window::new(2.0, 3.0, 2.0, 3.0).unwrap(), 16).unwrap();
    assert!(none.is_empty());
}

fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[test]
fn perturbed_singular_curve_converges() {
    let d = twin_pole();
    let w = Window::square(2.5);
    let flat = |g: &RationalFn| -> Vec<Complex64> {
        singular_curve_extract(g, &w, 128).unwrap().into_iter().flat_map(|l| l.points).collect()
    };
    let base = flat(&d.g);
    let mut last = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3] {
        let out = perturb_to_maxface(&d.g, &d.omega, eps, &SolverOptions::default()).unwrap();
        let h = hausdorff(&flat(&out.g_tilde), &base);
        assert!(h < last, "eps {eps}: {h} vs {last}");
        last = h;
    }
}

/// `omega` pulled back by `z = p + 1/w`.
fn pull_back(d: &WeierstrassData, p: Complex64) -> WeierstrassData {
    let mu = RationalFn::mobius(p, c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    let g = d.g.compose(&mu).unwrap();
    let dmu = RationalFn::inverse_power(c(0.0, 0.0), 2).scale(c(-1.0, 0.0));
    let f = d.omega.compose(&mu).unwrap().mul(&dmu);
    let punctures = d
        .punctures
        .iter()
        .map(|q| match q {
            PointExt::Infinity => PointExt::finite(0.0, 0.0),
            PointExt::Finite(z) if (z - p).norm() < 1e-12 => PointExt::Infinity,
            PointExt::Finite(z) => PointExt::Finite((z - p).inv()),
        })
        .collect();
    WeierstrassData::new(g, f, punctures, (d.base_point - p).inv()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn paths_around_the_same_side_agree(a in 0.2f64..2.8, r in 1.3f64..2.5) {
        let d = twin_pole();
        let target = Complex64::from_polar(r, a);
        let direct = evaluate_immersion(&d, target, &[c(2.0, 0.0) + c(0.0, 0.01)]);
        let around = evaluate_immersion(&d, target, &[c(3.0, 0.0), Complex64::from_polar(3.0, a)]);
        let (x, y) = (direct.unwrap(), around.unwrap());
        prop_assert!(close3(x, y.as_array(), 1e-8));
    }

    #[test]
    fn end_classification_survives_moving_the_end(re in -1.0f64..1.0, im in 0.3f64..1.0) {
        let p = c(re, im);
        for d in [catenoid(), twin_pole()] {
            let moved = pull_back(&d, p);
            for q in d.punctures.iter().copied() {
                let q2 = match q {
                    PointExt::Infinity => PointExt::finite(0.0, 0.0),
                    PointExt::Finite(z) => PointExt::Finite((z - p).inv()),
                };
                let a = classify_end(&d, q).unwrap();
                let b = classify_end(&moved, q2).unwrap();
                prop_assert_eq!(a.complete, b.complete);
                prop_assert_eq!(a.dominant_order, b.dominant_order);
            }
        }
    }
}
