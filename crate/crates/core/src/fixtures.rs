//! Demo data and randomized inputs.

use num_complex::Complex64;
use rand::Rng;

use crate::rational::{PointExt, Poly, RationalFn};
use crate::weierstrass::WeierstrassData;

/// Random Gauss map with `n` distinct poles, one of them at infinity.
///
/// Finite poles lie in `[-2, 2]^2`, pairwise at least `min_sep` apart; every
/// pole has order `1..=max_order`.
pub fn random_gauss_map<R: Rng>(rng: &mut R, n: usize, max_order: u32, min_sep: f64) -> RationalFn {
    let mut pts: Vec<Complex64> = Vec::new();
    while pts.len() + 1 < n {
        let p = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if pts.iter().all(|q| (p - q).norm() >= min_sep) {
            pts.push(p);
        }
    }
    let coeff = |rng: &mut R| {
        let r = rng.gen_range(0.5..1.5);
        Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    };
    let deg = rng.gen_range(1..=max_order) as usize;
    let mut poly: Vec<Complex64> = (0..=deg).map(|_| coeff(rng)).collect();
    poly[deg] = coeff(rng);
    let mut g = RationalFn::from_poly(Poly::new(poly));
    for p in pts {
        let k = rng.gen_range(1..=max_order);
        let lead = coeff(rng);
        let part = RationalFn::inverse_power(p, k).scale(lead);
        g = g.add(&part);
    }
    g
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Lorentzian catenoid: `g = z`, `omega = dz / z^2` on `C \ {0}`, base 1.
pub fn catenoid() -> WeierstrassData {
    WeierstrassData::new(
        RationalFn::identity(),
        RationalFn::inverse_power(c(0.0, 0.0), 2),
        vec![PointExt::finite(0.0, 0.0), PointExt::Infinity],
        c(1.0, 0.0),
    )
    .expect("catenoid data is valid")
}

/// `z + 1/z`, poles at 0 and infinity.
pub fn twin_pole_map() -> RationalFn {
    RationalFn::identity().add(&RationalFn::inverse_power(c(0.0, 0.0), 1))
}

/// `1/z^2 - 1 + z^2`, the height differential solving the residue
/// conditions for [`twin_pole_map`].
pub fn twin_pole_omega() -> RationalFn {
    RationalFn::inverse_power(c(0.0, 0.0), 2)
        .add(&RationalFn::constant(c(-1.0, 0.0)))
        .add(&RationalFn::monomial(c(1.0, 0.0), 2))
}

/// Twin-pole maximal map; its zeros of `omega` on the unit circle are
/// branch points.
pub fn twin_pole() -> WeierstrassData {
    WeierstrassData::new(
        twin_pole_map(),
        twin_pole_omega(),
        vec![PointExt::finite(0.0, 0.0), PointExt::Infinity],
        c(2.0, 0.0),
    )
    .expect("twin-pole data is valid")
}

/// Jorge-Meeks companion: `g = i z^2`, `omega = dz / (z^3 - 1)^2`, punctured
/// at the cube roots of unity.
pub fn jorge_meeks() -> WeierstrassData {
    let roots: Vec<(Complex64, u32)> = (0..3)
        .map(|k| (Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0), 2))
        .collect();
    let punctures = roots.iter().map(|&(z, _)| PointExt::Finite(z)).collect();
    WeierstrassData::new(
        RationalFn::monomial(c(0.0, 1.0), 2),
        RationalFn::from_factors(c(1.0, 0.0), &[], &roots),
        punctures,
        c(0.0, 0.0),
    )
    .expect("Jorge-Meeks data is valid")
}
