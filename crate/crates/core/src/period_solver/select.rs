use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rational::{PointExt, RationalFn};

/// Polar coefficients at one point of every basis element, read as the
/// 1-form `basis_u dz` (or as a function when `as_form` is false).
pub(crate) struct PolarTable {
    pub point: PointExt,
    /// `rows[k][u]`: coefficient of `t^(lo + k)` of `basis_u`.
    rows: Vec<Vec<Complex64>>,
    lo: i32,
}

impl PolarTable {
    pub fn new(basis: &[RationalFn], point: PointExt, as_form: bool) -> Self {
        let shift = if as_form && point.is_infinite() { -2 } else { 0 };
        let lo = basis
            .iter()
            .filter(|b| !b.is_zero())
            .map(|b| b.order_bound(point) + shift)
            .min()
            .unwrap_or(0)
            .min(0);
        let series: Vec<_> = basis
            .iter()
            .map(|b| {
                let ord = b.order_bound(point) + shift;
                if b.is_zero() || ord >= 0 {
                    return None;
                }
                let s = if as_form {
                    b.form_laurent(point, (-ord) as usize)
                } else {
                    b.laurent(point, (-ord) as usize)
                };
                Some(s)
            })
            .collect();
        let rows = (lo..0)
            .map(|k| {
                series
                    .iter()
                    .map(|s| s.as_ref().map_or(Complex64::new(0.0, 0.0), |s| s.coeff(k)))
                    .collect()
            })
            .collect();
        PolarTable { point, rows, lo }
    }

    /// Restricts to the single order `k`.
    pub fn only_order(mut self, k: i32) -> Self {
        let idx = k - self.lo;
        self.rows = if idx >= 0 && (idx as usize) < self.rows.len() {
            vec![self.rows[idx as usize].clone()]
        } else {
            Vec::new()
        };
        self.lo = k;
        self
    }

    /// Size of the polar part of `sum c_u basis_u` relative to the size it
    /// would have without cancellation; 0 when no pole is possible.
    pub fn ratio(&self, c: &[Complex64]) -> f64 {
        let mut top = 0.0_f64;
        let mut bottom = 0.0_f64;
        for row in &self.rows {
            let v: Complex64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
            let s: f64 = row.iter().zip(c).map(|(a, b)| a.norm() * b.norm()).sum();
            top = top.max(v.norm());
            bottom = bottom.max(s);
        }
        if bottom > 0.0 {
            top / bottom
        } else {
            0.0
        }
    }
}

/// Unit vector in the span of `kernel`, with real combination weights when
/// `real` is set.
pub(crate) fn random_kernel_vector(kernel: &[DVector<Complex64>], real: bool, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let dim = kernel[0].len();
    let mut v = DVector::<Complex64>::zeros(dim);
    for k in kernel {
        let w = if real {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        v += k * w;
    }
    let n = v.norm();
    if n > 0.0 {
        v /= Complex64::new(n, 0.0);
    }
    v.iter().copied().collect()
}

/// Best of `samples` random kernel vectors by the smallest presence ratio
/// over `tables`; returns the vector and its per-table ratios.
pub(crate) fn select(
    kernel: &[DVector<Complex64>],
    tables: &[&PolarTable],
    samples: usize,
    real: bool,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<Complex64>, Vec<f64>)> {
    if kernel.is_empty() {
        return None;
    }
    let mut best: Option<(f64, Vec<Complex64>, Vec<f64>)> = None;
    for _ in 0..samples.max(1) {
        let c = random_kernel_vector(kernel, real, rng);
        let ratios: Vec<f64> = tables.iter().map(|t| t.ratio(&c)).collect();
        let score = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, c, ratios));
        }
    }
    best.map(|(_, c, r)| (c, r))
}
