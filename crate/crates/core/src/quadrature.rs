//! Path and loop integrals of vector-valued holomorphic integrands.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rational::PointExt;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn zeros<const N: usize>() -> [Complex64; N] {
    [Complex64::new(0.0, 0.0); N]
}

/// One G7/K15 panel on the segment `[a, b]`: (Kronrod estimate, error).
fn gk15<const N: usize, F>(f: &F, a: Complex64, b: Complex64) -> Result<([Complex64; N], f64)>
where
    F: Fn(Complex64) -> [Complex64; N],
{
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut kron = zeros::<N>();
    let mut gauss = zeros::<N>();
    let mut add = |x: f64, wk: f64, wg: Option<f64>| -> Result<()> {
        let v = f(mid + half * x);
        for i in 0..N {
            if !v[i].is_finite() {
                return Err(Error::numerical(format!(
                    "integrand is not finite at {}",
                    mid + half * x
                )));
            }
            kron[i] += v[i] * wk;
            if let Some(w) = wg {
                gauss[i] += v[i] * w;
            }
        }
        Ok(())
    };
    add(0.0, WGK[7], Some(WG[3]))?;
    for j in 0..7 {
        let wg = (j % 2 == 1).then(|| WG[j / 2]);
        add(XGK[j], WGK[j], wg)?;
        add(-XGK[j], WGK[j], wg)?;
    }
    let mut err = 0.0_f64;
    for i in 0..N {
        kron[i] *= half;
        gauss[i] *= half;
        err = err.max((kron[i] - gauss[i]).norm());
    }
    Ok((kron, err))
}

/// `int_a^b f(z) dz` along the straight segment, by adaptive bisection with
/// absolute tolerance `abs_tol` for the whole segment.
pub fn integrate_segment<const N: usize, F>(
    f: &F,
    a: Complex64,
    b: Complex64,
    abs_tol: f64,
    max_depth: u32,
) -> Result<[Complex64; N]>
where
    F: Fn(Complex64) -> [Complex64; N],
{
    if a == b {
        return Ok(zeros());
    }
    let mut total = zeros::<N>();
    let mut stack = vec![(a, b, abs_tol, 0u32)];
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi)?;
        if err <= tol || (hi - lo).norm() < 1e-14 * (1.0 + lo.norm()) {
            for i in 0..N {
                total[i] += val[i];
            }
            continue;
        }
        if depth >= max_depth {
            return Err(Error::numerical(format!(
                "adaptive quadrature did not converge on [{lo}, {hi}] (error {err:.3e}, depth {depth})"
            )));
        }
        let mid = (lo + hi) * 0.5;
        stack.push((mid, hi, tol * 0.5, depth + 1));
        stack.push((lo, mid, tol * 0.5, depth + 1));
    }
    Ok(total)
}

/// Result of [`circle_integral`].
#[derive(Clone, Debug)]
pub struct LoopIntegral<const N: usize> {
    pub value: [Complex64; N],
    /// Previous refinement level, for diagnostics.
    pub previous: [Complex64; N],
    pub points: usize,
    /// Largest `|f(z)| * radius` seen on the loop.
    pub scale: f64,
}

/// `\oint f(z) dz` counter-clockwise over `|z - center| = radius` by the
/// periodic trapezoid rule, doubling the node count until two successive
/// estimates differ by less than `tol` in every component.
pub fn circle_integral<const N: usize, F>(
    f: &F,
    center: Complex64,
    radius: f64,
    tol: f64,
    max_points: usize,
) -> Result<LoopIntegral<N>>
where
    F: Fn(Complex64) -> [Complex64; N],
{
    let mut sum = zeros::<N>();
    let mut scale = 0.0_f64;
    let mut sample = |k: usize, n: usize, sum: &mut [Complex64; N]| -> Result<()> {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let z = center + e * radius;
        let v = f(z);
        for i in 0..N {
            let w = v[i] * e * radius;
            if !w.is_finite() {
                return Err(Error::numerical(format!("integrand is not finite at {z}")));
            }
            scale = scale.max(w.norm());
            sum[i] += w;
        }
        Ok(())
    };
    let mut n = 32;
    for k in 0..n {
        sample(k, n, &mut sum)?;
    }
    let estimate = |sum: &[Complex64; N], n: usize| -> [Complex64; N] {
        let mut out = *sum;
        for v in out.iter_mut() {
            *v *= Complex64::new(0.0, 2.0 * PI / n as f64);
        }
        out
    };
    let mut prev = estimate(&sum, n);
    loop {
        let next_n = 2 * n;
        for k in (1..next_n).step_by(2) {
            sample(k, next_n, &mut sum)?;
        }
        n = next_n;
        let cur = estimate(&sum, n);
        let diff = (0..N).map(|i| (cur[i] - prev[i]).norm()).fold(0.0, f64::max);
        if diff < tol {
            return Ok(LoopIntegral {
                value: cur,
                previous: prev,
                points: n,
                scale,
            });
        }
        if n >= max_points {
            return Err(Error::numerical(format!(
                "loop quadrature stalled at {n} nodes: last estimates {cur:?} and {prev:?}"
            )));
        }
        prev = cur;
    }
}

/// A circle around one puncture used for period integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodLoop {
    pub around: PointExt,
    pub center: Complex64,
    pub radius: f64,
    /// Loops around infinity run clockwise so that infinity lies on their left.
    pub clockwise: bool,
}

/// Smallest pairwise distance among the finite points, if there are two.
pub fn min_gap(points: &[Complex64]) -> Option<f64> {
    let mut gap: Option<f64> = None;
    for i in 0..points.len() {
        for j in 0..i {
            let d = (points[i] - points[j]).norm();
            gap = Some(gap.map_or(d, |g| g.min(d)));
        }
    }
    gap
}

/// One loop per puncture: radius `min-gap/4` around finite punctures, and a
/// clockwise circle of radius `4 max|p|` around infinity.
pub fn period_loops(punctures: &[PointExt]) -> Vec<PeriodLoop> {
    period_loops_among(punctures, &[])
}

/// [`period_loops`] keeping every loop clear of the extra singular points
/// `others` as well.
pub fn period_loops_among(punctures: &[PointExt], others: &[Complex64]) -> Vec<PeriodLoop> {
    let mut finite: Vec<Complex64> = punctures.iter().filter_map(|p| p.as_finite()).collect();
    for &q in others {
        if !finite.iter().any(|&p| crate::rational::same_point(p, q)) {
            finite.push(q);
        }
    }
    let far = finite.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let outer = if far > 0.0 { 4.0 * far } else { 1.0 };
    let r = match min_gap(&finite) {
        Some(g) => g / 4.0,
        None => 0.25 * far.max(1.0),
    };
    punctures
        .iter()
        .map(|&p| match p {
            PointExt::Finite(c) => PeriodLoop { around: p, center: c, radius: r, clockwise: false },
            PointExt::Infinity => PeriodLoop {
                around: p,
                center: Complex64::new(0.0, 0.0),
                radius: outer,
                clockwise: true,
            },
        })
        .collect()
}

/// `\oint f dz` over `lp` with its orientation.
pub fn loop_integral<const N: usize, F>(f: &F, lp: &PeriodLoop, tol: f64, max_points: usize) -> Result<LoopIntegral<N>>
where
    F: Fn(Complex64) -> [Complex64; N],
{
    let mut out = circle_integral(f, lp.center, lp.radius, tol, max_points)?;
    if lp.clockwise {
        for v in out.value.iter_mut().chain(out.previous.iter_mut()) {
            *v = -*v;
        }
    }
    Ok(out)
}
