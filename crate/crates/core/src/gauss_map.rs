//! Gauss maps with a prescribed singular curve: finite Blaschke products on
//! `|z| = R` precomposed with a rational map.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{cpair, poly_roots, same_point, Divisor, PointExt, Poly, RationalFn};

/// Blaschke product data on the circle `|z| = radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeSpec {
    pub radius: f64,
    #[serde(with = "cpair::vec", default)]
    pub zeros: Vec<Complex64>,
    #[serde(with = "cpair::vec", default)]
    pub poles: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularCurveSpec {
    pub precompose: RationalFn,
    pub blaschke: BlaschkeSpec,
}

impl BlaschkeSpec {
    pub fn validate(&self) -> Result<()> {
        let r = self.radius;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(format!("Blaschke radius must be positive, got {r}")));
        }
        for (what, pts) in [("zero", &self.zeros), ("pole", &self.poles)] {
            for p in pts {
                if !p.is_finite() || p.norm() >= r {
                    return Err(Error::invalid(format!(
                        "Blaschke {what} {p} is not strictly inside |z| = {r}"
                    )));
                }
            }
        }
        for a in &self.zeros {
            if self.poles.iter().any(|b| same_point(*a, *b)) {
                return Err(Error::invalid(format!("Blaschke zero and pole coincide at {a}")));
            }
        }
        Ok(())
    }
}

/// `R^2 / conj(a)`, the reflection of `a` in `|z| = R`.
pub fn reflect(a: Complex64, radius: f64) -> Complex64 {
    radius * radius / a.conj()
}

/// Product of the factors `(R/conj a)(z - a)/(z - a')` over the zeros and
/// their reciprocals over the poles; a point at the origin contributes
/// `-z/R` or `-R/z`.
pub fn build_blaschke(spec: &BlaschkeSpec) -> Result<RationalFn> {
    spec.validate()?;
    let r = spec.radius;
    let mut lead = Complex64::new(1.0, 0.0);
    let mut zeros = Vec::new();
    let mut poles = Vec::new();
    for &a in &spec.zeros {
        if a == Complex64::new(0.0, 0.0) {
            lead *= -1.0 / r;
            zeros.push((a, 1));
        } else {
            lead *= r / a.conj();
            zeros.push((a, 1));
            poles.push((reflect(a, r), 1));
        }
    }
    for &b in &spec.poles {
        if b == Complex64::new(0.0, 0.0) {
            lead *= -r;
            poles.push((b, 1));
        } else {
            lead *= b.conj() / r;
            poles.push((b, 1));
            zeros.push((reflect(b, r), 1));
        }
    }
    Ok(RationalFn::from_factors(lead, &zeros, &poles))
}

/// Solutions of `f(z) = w`.
pub fn preimages(f: &RationalFn, w: Complex64) -> Result<Vec<Complex64>> {
    let eq = f.num() - &f.den().scale(w);
    Ok(poly_roots(&eq)?.into_iter().map(|(z, _)| z).collect())
}

/// `g = G o f` with `G` the Blaschke product; checks `|g| = 1` on preimages
/// of 64 points of `|w| = R`.
pub fn compose_singular_curve(spec: &SingularCurveSpec) -> Result<RationalFn> {
    if spec.precompose.is_constant() {
        return Err(Error::invalid("precomposition map must be nonconstant"));
    }
    let outer = build_blaschke(&spec.blaschke)?;
    let g = outer.compose(&spec.precompose)?;
    if g.is_constant() {
        return Err(Error::invalid("composed Gauss map is constant"));
    }
    let r = spec.blaschke.radius;
    for k in 0..64 {
        let w = Complex64::from_polar(r, 2.0 * PI * k as f64 / 64.0);
        for z in preimages(&spec.precompose, w)? {
            let m = g.eval(z).norm();
            if (m - 1.0).abs() > 1e-8 {
                return Err(Error::numerical(format!(
                    "|g| = {m} at preimage {z} of {w}, expected 1"
                )));
            }
        }
    }
    Ok(g)
}

/// `(g)_inf`, including infinity when `deg num > deg den`.
pub fn pole_divisor(g: &RationalFn) -> Divisor {
    let mut d = Divisor::from_entries(g.poles().iter().map(|&(p, k)| (PointExt::Finite(p), k as i32)));
    let nd = g.num_degree().unwrap_or(0);
    if nd > g.den_degree() {
        d.add(PointExt::Infinity, (nd - g.den_degree()) as i32);
    }
    d
}

/// A Mobius map `mu` with `g o mu` having a pole at infinity, sending the
/// lexicographically smallest finite pole there.
pub fn normalize_pole_at_infinity(g: &RationalFn) -> Result<(RationalFn, RationalFn)> {
    if g.has_pole_at_infinity() {
        return Ok((RationalFn::identity(), g.clone()));
    }
    let &(p, _) = g
        .poles()
        .first()
        .ok_or_else(|| Error::invalid("Gauss map has no pole to normalise"))?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mu = RationalFn::mobius(p, one, one, zero)?;
    let gm = g.compose(&mu)?;
    Ok((mu, gm))
}

/// Fujimori's map `(z-1)(z^2+3z+1) / ((z+1)(z^2-3z+1))`.
pub fn fujimori_map() -> RationalFn {
    let num = &Poly::from_real(&[-1.0, 1.0]) * &Poly::from_real(&[1.0, 3.0, 1.0]);
    let den = &Poly::from_real(&[1.0, 1.0]) * &Poly::from_real(&[1.0, -3.0, 1.0]);
    RationalFn::new(num, den).expect("nonzero denominator")
}
