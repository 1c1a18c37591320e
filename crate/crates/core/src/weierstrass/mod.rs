//! Weierstrass data `(g, omega)`, the immersion
//! `X = Re int ((1 + g^2) omega, i (1 - g^2) omega, -2 g omega)` and the
//! checks a complete maximal map or maxface has to pass.

mod checks;
mod singular;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_segment, min_gap};
use crate::rational::{cpair, same_point, PointExt, RationalFn};

pub use checks::{
    check_divisor_condition, classify_end, classify_end_with, singular_set_compactness, singular_set_compactness_with, verify, verify_periods, CompactnessCheck,
    CompactnessFailure, DivisorCheck, DivisorWitness, EndRecord, PeriodResidual, VerificationReport, VerifyOptions,
};
pub use singular::{singular_components, singular_curve_extract, Polyline, SingularComponent, Window};

/// A point of `E^3_1`, metric `dx1^2 + dx2^2 - dx3^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SurfacePoint {
    pub fn origin() -> Self {
        SurfacePoint { x1: 0.0, x2: 0.0, x3: 0.0 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }
}

/// Gauss map `g`, height differential `omega = f dz` and the punctures of
/// the domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct WeierstrassData {
    pub g: RationalFn,
    /// `omega / dz`.
    pub omega: RationalFn,
    pub punctures: Vec<PointExt>,
    pub base_point: Complex64,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    g: RationalFn,
    omega: RationalFn,
    punctures: Vec<PointExt>,
    #[serde(with = "cpair::single")]
    base_point: Complex64,
}

impl TryFrom<Repr> for WeierstrassData {
    type Error = Error;
    fn try_from(r: Repr) -> Result<Self> {
        WeierstrassData::new(r.g, r.omega, r.punctures, r.base_point)
    }
}

impl From<WeierstrassData> for Repr {
    fn from(d: WeierstrassData) -> Self {
        Repr {
            g: d.g,
            omega: d.omega,
            punctures: d.punctures,
            base_point: d.base_point,
        }
    }
}

fn probe_points() -> [Complex64; 8] {
    [
        Complex64::new(0.31, 0.17),
        Complex64::new(-0.73, 0.41),
        Complex64::new(1.37, -0.59),
        Complex64::new(-2.11, -1.23),
        Complex64::new(0.07, 2.71),
        Complex64::new(3.3, 0.9),
        Complex64::new(-0.45, -0.62),
        Complex64::new(1.9, 2.2),
    ]
}

impl WeierstrassData {
    /// Validates the data: distinct punctures, `|g|` not identically 1,
    /// `omega` vanishing to order `>= 2m` at every pole of order `m` of `g`
    /// inside the domain, and an admissible base point.
    pub fn new(g: RationalFn, omega: RationalFn, punctures: Vec<PointExt>, base_point: Complex64) -> Result<Self> {
        if omega.is_zero() {
            return Err(Error::invalid("omega is identically zero"));
        }
        for (i, p) in punctures.iter().enumerate() {
            if let PointExt::Finite(z) = p {
                if !z.is_finite() {
                    return Err(Error::invalid(format!("puncture {z} is not finite")));
                }
            }
            if punctures[..i].iter().any(|q| q.approx_eq(p)) {
                return Err(Error::invalid(format!("puncture {p} is listed twice")));
            }
        }
        if probe_points().iter().all(|&z| (g.eval(z).norm() - 1.0).abs() < 1e-12) {
            return Err(Error::invalid("|g| is identically 1"));
        }
        let data = WeierstrassData {
            g,
            omega,
            punctures,
            base_point,
        };
        let mut poles: Vec<PointExt> = data.g.poles().iter().map(|&(p, _)| PointExt::Finite(p)).collect();
        if data.g.has_pole_at_infinity() {
            poles.push(PointExt::Infinity);
        }
        for p in poles {
            if data.is_puncture(p) {
                continue;
            }
            let m = -data.g.order_at(p)?;
            let k = data.omega.form_order_at(p)?;
            if k < 2 * m {
                return Err(Error::invalid(format!(
                    "g has a pole of order {m} at {p} inside the domain where omega has order {k} < {}",
                    2 * m
                )));
            }
        }
        if !base_point.is_finite() {
            return Err(Error::invalid("base point is not finite"));
        }
        if data.is_puncture(PointExt::Finite(base_point)) {
            return Err(Error::invalid(format!("base point {base_point} is a puncture")));
        }
        if data.integrand_poles().iter().any(|&p| same_point(p, base_point)) {
            return Err(Error::invalid(format!("base point {base_point} is a pole of the integrand")));
        }
        Ok(data)
    }

    pub fn is_puncture(&self, p: PointExt) -> bool {
        self.punctures.iter().any(|q| q.approx_eq(&p))
    }

    pub fn finite_punctures(&self) -> Vec<Complex64> {
        self.punctures.iter().filter_map(|p| p.as_finite()).collect()
    }

    /// Finite poles of `(1 + g^2) omega`, `i (1 - g^2) omega` or `g omega`.
    pub fn integrand_poles(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for &(p, _) in self.g.poles().iter().chain(self.omega.poles()) {
            if out.iter().any(|&q| same_point(p, q)) {
                continue;
            }
            let at = PointExt::Finite(p);
            let (Ok(kg), Ok(kf)) = (self.g.order_at(at), self.omega.order_at(at)) else {
                continue;
            };
            if kf + 2 * kg.min(0) < 0 {
                out.push(p);
            }
        }
        out
    }

    /// The three integrands at `z`.
    pub fn integrands(&self, z: Complex64) -> [Complex64; 3] {
        let g = self.g.eval(z);
        let f = self.omega.eval(z);
        let i = Complex64::new(0.0, 1.0);
        [(1.0 + g * g) * f, i * (1.0 - g * g) * f, -2.0 * g * f]
    }

    /// Finite punctures, integrand poles and the base point.
    pub fn obstacles(&self) -> Vec<Complex64> {
        let mut pts = self.finite_punctures();
        for p in self.integrand_poles() {
            if !pts.iter().any(|&q| same_point(p, q)) {
                pts.push(p);
            }
        }
        pts
    }

    /// `min-gap / 8` over punctures, integrand poles and the base point.
    pub fn path_margin(&self) -> f64 {
        let mut pts = self.obstacles();
        pts.push(self.base_point);
        min_gap(&pts).map_or(0.125, |g| g / 8.0)
    }
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// `X(target)` along the polyline `base_point -> via... -> target`.
pub fn evaluate_immersion(data: &WeierstrassData, target: Complex64, via: &[Complex64]) -> Result<SurfacePoint> {
    let mut nodes = Vec::with_capacity(via.len() + 2);
    nodes.push(data.base_point);
    nodes.extend_from_slice(via);
    nodes.push(target);
    let delta = data.path_margin();
    let obstacles = data.obstacles();
    for w in nodes.windows(2) {
        for &p in &obstacles {
            let d = segment_distance(w[0], w[1], p);
            if d < delta {
                return Err(Error::invalid(format!(
                    "path segment {} -> {} passes within {d:.3e} of the singular point {p} (margin {delta:.3e})",
                    w[0], w[1]
                )));
            }
        }
    }
    let f = |z: Complex64| data.integrands(z);
    let mut acc = [Complex64::new(0.0, 0.0); 3];
    for w in nodes.windows(2) {
        let v = integrate_segment(&f, w[0], w[1], 1e-10, 40)?;
        for i in 0..3 {
            acc[i] += v[i];
        }
    }
    Ok(SurfacePoint {
        x1: acc[0].re,
        x2: acc[1].re,
        x3: acc[2].re,
    })
}

/// Conformal factor `|1 - |g|^2| |f|` of the induced metric.
pub fn metric_factor(data: &WeierstrassData, z: Complex64) -> Result<f64> {
    if data.omega.pole_order_at(z) > 0 {
        return Err(Error::invalid(format!("{z} is a pole of omega")));
    }
    let g = data.g.eval(z);
    let f = data.omega.eval(z);
    if !g.is_finite() {
        // pole of g inside the domain: |g|^2 |f| stays bounded
        let h = data.g.mul(&data.g).mul(&data.omega);
        return Ok(h.eval(z).norm());
    }
    Ok((1.0 - g.norm_sqr()).abs() * f.norm())
}

#[cfg(test)]
mod tests;
