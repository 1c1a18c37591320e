use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::WeierstrassData;
use crate::error::{Error, Result};
use crate::quadrature::{loop_integral, min_gap, period_loops_among};
use crate::rational::{cpair, PointExt};

/// Tolerances used by [`verify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub period_tol: f64,
    /// `| |g(p)| - 1 |` under which an end counts as light-like.
    pub light_like_tol: f64,
    /// Smallest admissible `| |g| - 1 |` on the circles around a puncture.
    pub compact_margin: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            period_tol: 1e-9,
            light_like_tol: 1e-6,
            compact_margin: 1e-4,
        }
    }
}

/// `|Re \oint|` of the three forms around one puncture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodResidual {
    pub puncture: PointExt,
    pub residual: [f64; 3],
    #[serde(with = "cpair::vec")]
    pub integral: Vec<Complex64>,
    pub radius: f64,
}

impl PeriodResidual {
    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Real periods around every puncture, by the trapezoid rule refined until
/// two estimates agree to `tol / 10`.
pub fn verify_periods(data: &WeierstrassData, tol: f64) -> Result<Vec<PeriodResidual>> {
    let f = |z: Complex64| data.integrands(z);
    let loops = period_loops_among(&data.punctures, &data.integrand_poles());
    let mut out = Vec::with_capacity(loops.len());
    for lp in loops {
        let li = loop_integral(&f, &lp, tol / 10.0, 1 << 20).map_err(|e| match e {
            Error::NumericalFailure(m) => Error::numerical(format!("period loop around {}: {m}", lp.around)),
            other => other,
        })?;
        out.push(PeriodResidual {
            puncture: lp.around,
            residual: li.value.map(|v| v.re.abs()),
            integral: li.value.to_vec(),
            radius: lp.radius,
        });
    }
    Ok(out)
}

/// A point of the domain where `(omega)_0 = 2 (g)_inf` fails.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivisorWitness {
    pub point: PointExt,
    pub omega_order: i32,
    pub g_pole_order: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivisorCheck {
    pub ok: bool,
    pub witnesses: Vec<DivisorWitness>,
}

/// Zeros of `omega` inside the domain must sit exactly at the poles of `g`,
/// with twice the pole order.
pub fn check_divisor_condition(data: &WeierstrassData) -> Result<DivisorCheck> {
    let mut candidates: Vec<PointExt> = Vec::new();
    let push = |p: PointExt, list: &mut Vec<PointExt>| {
        if !list.iter().any(|q| q.approx_eq(&p)) {
            list.push(p);
        }
    };
    for (z, _) in data.omega.zeros()? {
        push(PointExt::Finite(z), &mut candidates);
    }
    for &(z, _) in data.g.poles().iter().chain(data.omega.poles()) {
        push(PointExt::Finite(z), &mut candidates);
    }
    push(PointExt::Infinity, &mut candidates);
    let mut witnesses = Vec::new();
    for p in candidates {
        if data.is_puncture(p) {
            continue;
        }
        let k = data.omega.form_order_at(p)?;
        let m = if data.g.is_zero() { 0 } else { (-data.g.order_at(p)?).max(0) };
        if k != 2 * m {
            witnesses.push(DivisorWitness {
                point: p,
                omega_order: k,
                g_pole_order: m,
            });
        }
    }
    witnesses.sort_by(|a, b| a.point.lex_cmp(&b.point));
    Ok(DivisorCheck {
        ok: witnesses.is_empty(),
        witnesses,
    })
}

mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// Completeness data of one end.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndRecord {
    pub point: PointExt,
    /// `|g(p)|`, infinite at a pole of `g`.
    #[serde(with = "inf_f64")]
    pub abs_g: f64,
    pub complete: bool,
    pub order_omega: i32,
    /// `None` when `g` vanishes identically.
    pub order_g2omega: Option<i32>,
    pub dominant_order: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

/// [`classify_end_with`] with the default light-like tolerance.
pub fn classify_end(data: &WeierstrassData, p: PointExt) -> Result<EndRecord> {
    classify_end_with(data, p, VerifyOptions::default().light_like_tol)
}

/// An end is complete when `|g(p)| != 1` and the dominant form (`omega` if
/// `|g(p)| < 1`, `g^2 omega` if `|g(p)| > 1`) has a pole there.
pub fn classify_end_with(data: &WeierstrassData, p: PointExt, light_like_tol: f64) -> Result<EndRecord> {
    if !data.is_puncture(p) {
        return Err(Error::invalid(format!("{p} is not a puncture")));
    }
    let abs_g = data.g.value_at(p).map_or(f64::INFINITY, |v| v.norm());
    let order_omega = data.omega.form_order_at(p)?;
    let order_g2omega = if data.g.is_zero() {
        None
    } else {
        Some(2 * data.g.order_at(p)? + order_omega)
    };
    let mut rec = EndRecord {
        point: p,
        abs_g,
        complete: false,
        order_omega,
        order_g2omega,
        dominant_order: None,
        reason: None,
    };
    if (abs_g - 1.0).abs() <= light_like_tol {
        rec.reason = Some("light-like limit at end".into());
        return Ok(rec);
    }
    rec.dominant_order = if abs_g < 1.0 { Some(order_omega) } else { order_g2omega };
    rec.complete = rec.dominant_order.is_some_and(|k| k <= -1);
    if !rec.complete {
        rec.reason = Some(format!(
            "dominant form has order {} >= 0: paths into the end have finite length",
            rec.dominant_order.unwrap_or(0)
        ));
    }
    Ok(rec)
}

/// First sample that shows the singular set reaching a puncture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactnessFailure {
    pub puncture: PointExt,
    pub radius: f64,
    #[serde(with = "cpair::single")]
    pub point: Complex64,
    pub abs_g: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactnessCheck {
    pub ok: bool,
    pub failures: Vec<CompactnessFailure>,
}

const CIRCLES: usize = 8;
const SAMPLES: usize = 128;

/// Samples 8 concentric circles shrinking to `p` (radius halved each time;
/// for infinity the radius is taken in `w = 1/z`).
fn scan_puncture(data: &WeierstrassData, p: PointExt, r0: f64, margin: f64) -> Option<CompactnessFailure> {
    let fail = |r: f64, z: Complex64, abs_g: f64, reason: String| CompactnessFailure {
        puncture: p,
        radius: r,
        point: z,
        abs_g,
        reason,
    };
    for k in 0..CIRCLES {
        let r = r0 / (1u64 << k) as f64;
        let mut side: Option<bool> = None;
        let (mut fmin, mut fmax) = (f64::INFINITY, 0.0_f64);
        for j in 0..SAMPLES {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / SAMPLES as f64);
            let z = match p {
                PointExt::Finite(c) => c + e * r,
                PointExt::Infinity => e / r,
            };
            let abs_g = data.g.eval(z).norm();
            let d = abs_g - 1.0;
            if !(d.abs() >= margin) {
                return Some(fail(r, z, abs_g, format!("| |g| - 1 | = {:.3e} below {margin:.1e}", d.abs())));
            }
            if side.is_some_and(|s| s != (d > 0.0)) {
                return Some(fail(r, z, abs_g, "the unit locus of |g| crosses the circle".into()));
            }
            side = Some(d > 0.0);
            let f = data.omega.eval(z).norm();
            fmin = fmin.min(f);
            fmax = fmax.max(f);
        }
        if !(fmin > 1e-6 * fmax) {
            return Some(fail(r, p.as_finite().unwrap_or_default(), f64::NAN, "omega nearly vanishes on the circle".into()));
        }
    }
    None
}

/// True when `{|g| = 1} U {omega = 0}` stays away from every puncture:
/// sampled on 8 circles shrinking to each puncture, tightened once when the
/// first radius is inconclusive.
pub fn singular_set_compactness(data: &WeierstrassData) -> CompactnessCheck {
    singular_set_compactness_with(data, VerifyOptions::default().compact_margin)
}

pub fn singular_set_compactness_with(data: &WeierstrassData, margin: f64) -> CompactnessCheck {
    let obstacles = data.obstacles();
    let far = obstacles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut failures = Vec::new();
    for &p in &data.punctures {
        let r0 = match p {
            PointExt::Finite(z) => min_gap(&obstacles).map_or(0.25 * z.norm().max(1.0), |g| g / 4.0),
            PointExt::Infinity => 1.0 / (4.0 * far),
        };
        if scan_puncture(data, p, r0, margin).is_none() {
            continue;
        }
        if let Some(f) = scan_puncture(data, p, r0 / 16.0, margin) {
            failures.push(f);
        }
    }
    CompactnessCheck {
        ok: failures.is_empty(),
        failures,
    }
}

/// Everything [`verify`] checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub periods_ok: bool,
    pub period_residuals: Vec<PeriodResidual>,
    pub divisor_ok: bool,
    pub divisor_witnesses: Vec<DivisorWitness>,
    pub ends_complete: bool,
    pub ends: Vec<EndRecord>,
    pub singular_set_compact: bool,
    pub compactness_failures: Vec<CompactnessFailure>,
    /// Finite zeros of `omega` inside the domain that violate the divisor
    /// condition.
    #[serde(with = "cpair::vec")]
    pub branch_points: Vec<Complex64>,
}

impl VerificationReport {
    /// Names of the failed checks.
    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.periods_ok {
            out.push("periods");
        }
        if !self.divisor_ok {
            out.push("divisor");
        }
        if !self.ends_complete {
            out.push("completeness");
        }
        if !self.singular_set_compact {
            out.push("compactness");
        }
        out
    }
}

/// Periods, divisor condition, completeness of every end and compactness of
/// the singular set.
pub fn verify(data: &WeierstrassData, opts: &VerifyOptions) -> Result<VerificationReport> {
    let period_residuals = verify_periods(data, opts.period_tol)?;
    let periods_ok = period_residuals.iter().all(|r| r.max() <= opts.period_tol);
    let divisor = check_divisor_condition(data)?;
    let ends = data
        .punctures
        .iter()
        .map(|&p| classify_end_with(data, p, opts.light_like_tol))
        .collect::<Result<Vec<_>>>()?;
    let ends_complete = ends.iter().all(|e| e.complete);
    let compact = singular_set_compactness_with(data, opts.compact_margin);
    let branch_points: Vec<Complex64> = divisor
        .witnesses
        .iter()
        .filter(|w| w.omega_order > 2 * w.g_pole_order)
        .filter_map(|w| w.point.as_finite())
        .collect();
    Ok(VerificationReport {
        passed: periods_ok && divisor.ok && ends_complete && compact.ok,
        periods_ok,
        period_residuals,
        divisor_ok: divisor.ok,
        divisor_witnesses: divisor.witnesses,
        ends_complete,
        ends,
        singular_set_compact: compact.ok,
        compactness_failures: compact.failures,
        branch_points,
    })
}

