use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn z() -> RationalFn {
    RationalFn::identity()
}

fn inv_z() -> RationalFn {
    RationalFn::inverse_power(c(0.0, 0.0), 1)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

/// Independent oracle: periodic trapezoid rule for (1/2 pi i) \oint f dz.
fn contour_residue(f: &RationalFn, center: Complex64, r: f64, n: usize) -> (Complex64, f64) {
    let mut acc = c(0.0, 0.0);
    let mut max = 0.0_f64;
    for k in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let v = f.eval(center + e * r) * e * r;
        max = max.max(v.norm());
        acc += v;
    }
    (acc / n as f64, max)
}

fn random_rational(seed: u64) -> RationalFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let npoles = rng.gen_range(1..=8);
    let mut poles: Vec<(Complex64, u32)> = Vec::new();
    let mut deg = 0;
    while poles.len() < npoles && deg < 10 {
        let p = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if poles.iter().all(|(q, _)| (p - q).norm() >= 0.1) {
            let k = rng.gen_range(1..=3).min(10 - deg);
            deg += k;
            poles.push((p, k));
        }
    }
    let dn = rng.gen_range(0..=10);
    let num = Poly::new((0..=dn).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
    RationalFn::from_parts(num, poles)
}

#[test]
fn add_examples() {
    let s = inv_z().add(&z());
    assert_eq!(s.poles(), &[(c(0.0, 0.0), 1)]);
    assert_eq!(s.num(), &Poly::from_real(&[1.0, 0.0, 1.0]));
}

#[test]
fn mul_cancels() {
    let p = z().mul(&inv_z());
    assert!(p.is_constant());
    assert_eq!(p.num(), &Poly::one());
}

#[test]
fn compose_example() {
    // -1/w composed with 1/(z-1) is -(z-1)
    let outer = inv_z().neg();
    let inner = RationalFn::inverse_power(c(1.0, 0.0), 1);
    let h = outer.compose(&inner).unwrap();
    assert!(h.poles().is_empty());
    assert!(close(h.num().coeff(0), c(1.0, 0.0), 1e-12));
    assert!(close(h.num().coeff(1), c(-1.0, 0.0), 1e-12));
    assert_eq!(h.num().degree(), Some(1));
}

#[test]
fn division_by_zero_is_invalid() {
    assert!(matches!(z().div(&RationalFn::zero()), Err(crate::Error::InvalidInput(_))));
}

#[test]
fn derivative_examples() {
    let d = z().powi(2).derivative();
    assert_eq!(d.num(), &Poly::from_real(&[0.0, 2.0]));
    let d = inv_z().derivative();
    assert_eq!(d.poles(), &[(c(0.0, 0.0), 2)]);
    assert!(close(d.num().coeff(0), c(-1.0, 0.0), 1e-15));
    // d/dz (z-1)/(z+1) = 2/(z+1)^2
    let f = RationalFn::new(Poly::from_real(&[-1.0, 1.0]), Poly::from_real(&[1.0, 1.0])).unwrap();
    let d = f.derivative();
    assert_eq!(d.poles(), &[(c(-1.0, 0.0), 2)]);
    assert_eq!(d.num().degree(), Some(0));
    assert!(close(d.num().coeff(0), c(2.0, 0.0), 1e-14));
}

#[test]
fn order_examples() {
    let f = RationalFn::inverse_power(c(0.0, 0.0), 2);
    assert_eq!(f.order_at(PointExt::finite(0.0, 0.0)).unwrap(), -2);
    let q = RationalFn::from_parts(Poly::from_real(&[1.0, 0.0, -1.0, 0.0, 1.0]), vec![(c(0.0, 0.0), 2)]);
    let p = Complex64::from_polar(1.0, PI / 6.0);
    assert_eq!(q.order_at(PointExt::Finite(p)).unwrap(), 1);
    assert_eq!(q.order_at(PointExt::finite(0.3, 0.1)).unwrap(), 0);
    let h = z().add(&inv_z());
    assert_eq!(h.order_at(PointExt::Infinity).unwrap(), -1);
    assert!(RationalFn::zero().order_at(PointExt::Infinity).is_err());
}

#[test]
fn residue_examples() {
    assert!(close(inv_z().residue_at(PointExt::finite(0.0, 0.0)), c(1.0, 0.0), 1e-15));
    assert!(close(inv_z().residue_at(PointExt::Infinity), c(-1.0, 0.0), 1e-15));
    // (z + 1/z)(1/z^2 - 1 + z^2) has zero residue at 0
    let g = z().add(&inv_z());
    let f = RationalFn::inverse_power(c(0.0, 0.0), 2)
        .add(&RationalFn::constant(c(-1.0, 0.0)))
        .add(&z().powi(2));
    let prod = g.mul(&f);
    assert!(prod.residue_at(PointExt::finite(0.0, 0.0)).norm() < 1e-14);
    assert!(residue_of_product(&[&g, &f], PointExt::finite(0.0, 0.0)).norm() < 1e-15);
    // regular point
    assert_eq!(g.residue_at(PointExt::finite(2.0, 0.0)), c(0.0, 0.0));
}

#[test]
fn residue_sum_examples() {
    assert!(inv_z().residue_sum_check().norm() < 1e-15);
    let f = RationalFn::from_parts(Poly::one(), vec![(c(0.0, 0.0), 1), (c(1.0, 0.0), 1)]);
    assert!(f.residue_sum_check().norm() < 1e-15);
}

#[test]
fn json_shape() {
    let f = z();
    assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"num":[[0.0,0.0],[1.0,0.0]],"den":[[1.0,0.0]]}"#);
    let g: RationalFn = serde_json::from_str(r#"{"num":[[1,0]],"den":[[0,0],[0,0],[1,0]]}"#).unwrap();
    assert_eq!(g.poles(), &[(c(0.0, 0.0), 2)]);
    assert!(serde_json::from_str::<RationalFn>(r#"{"num":[[1,0]],"den":[]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laurent_residues_match_contour_quadrature(seed in any::<u64>()) {
        let f = random_rational(seed);
        for &(p, _) in f.poles() {
            let gap = f.poles().iter().filter(|(q, _)| !same_point(*q, p))
                .map(|(q, _)| (q - p).norm()).fold(1.0, f64::min);
            let (quad, scale) = contour_residue(&f, p, gap / 4.0, 512);
            let exact = f.residue_at(PointExt::Finite(p));
            prop_assert!((exact - quad).norm() <= 1e-8 * exact.norm().max(scale),
                "{} vs {}", exact, quad);
        }
    }

    #[test]
    fn residues_sum_to_zero(seed in any::<u64>()) {
        let f = random_rational(seed);
        let scale = f.poles().iter().map(|&(p, _)| f.residue_at(PointExt::Finite(p)).norm())
            .fold(f.residue_at(PointExt::Infinity).norm(), f64::max).max(1.0);
        prop_assert!(f.residue_sum_check().norm() <= 1e-9 * scale);
    }

    #[test]
    fn divisor_has_degree_zero(seed in any::<u64>()) {
        let f = random_rational(seed);
        prop_assume!(!f.is_constant());
        prop_assert_eq!(f.divisor().unwrap().degree(), 0);
    }

    #[test]
    fn arithmetic_agrees_with_pointwise(sa in any::<u64>(), sb in any::<u64>()) {
        let a = random_rational(sa);
        let b = random_rational(sb);
        let mut rng = ChaCha8Rng::seed_from_u64(sa ^ sb);
        let sum = a.add(&b);
        let prod = a.mul(&b);
        let quot = a.div(&b).unwrap();
        for _ in 0..20 {
            let w = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (va, vb) = (a.eval(w), b.eval(w));
            // the expanded numerator of the sum is only good to its Horner bound
            let den: Complex64 = sum.poles().iter().map(|&(p, k)| (w - p).powi(k as i32)).product();
            let horner = 64.0 * f64::EPSILON * sum.num().eval_scale(w) / den.norm();
            prop_assert!(close(sum.eval(w), va + vb, 1e-10 * (va.norm() + vb.norm()).max(1.0) + horner));
            prop_assert!(close(prod.eval(w), va * vb, 1e-10));
            prop_assert!(close(quot.eval(w), va / vb, 1e-10 * (1.0 + (va / vb).norm())));
        }
    }

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>()) {
        let f = random_rational(seed);
        let d = f.derivative();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        for _ in 0..10 {
            let w = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let nearest = f.poles().iter().map(|(p, _)| (p - w).norm()).fold(f64::INFINITY, f64::min);
            prop_assume!(nearest > 0.05);
            let h = 1e-5;
            let fd = (f.eval(w + h) - f.eval(w - h)) / (2.0 * h);
            prop_assert!((d.eval(w) - fd).norm() <= 1e-6 * d.eval(w).norm().max(f.eval(w).norm()).max(1.0) / nearest.min(1.0).powi(3));
        }
    }

    #[test]
    fn compose_agrees_with_pointwise(sa in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(sa);
        let rnd = |rng: &mut ChaCha8Rng| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let outer = RationalFn::from_factors(rnd(&mut rng), &[(rnd(&mut rng), 1), (rnd(&mut rng), 2)], &[(rnd(&mut rng), 1)]);
        let inner = RationalFn::from_factors(rnd(&mut rng), &[(rnd(&mut rng), 2)], &[(rnd(&mut rng), 1), (rnd(&mut rng), 1)]);
        let h = outer.compose(&inner).unwrap();
        for _ in 0..20 {
            let w = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let expected = outer.eval(inner.eval(w));
            prop_assume!(expected.norm() < 1e6);
            prop_assert!(close(h.eval(w), expected, 1e-9), "{} vs {}", h.eval(w), expected);
        }
    }
}

