use num_complex::Complex64;

/// Truncated Laurent series `sum_i coeffs[i] * t^(order + i)` in a local
/// coordinate `t` (`z - p` at a finite point, `1/z` at infinity).
///
/// `order` is a lower bound on the true order: leading coefficients may be
/// zero when the expansion point is a zero of the function.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    pub order: i32,
    pub coeffs: Vec<Complex64>,
}

impl Laurent {
    pub fn new(order: i32, coeffs: Vec<Complex64>) -> Self {
        Laurent { order, coeffs }
    }

    /// Coefficient of `t^k`; zero outside the stored range.
    pub fn coeff(&self, k: i32) -> Complex64 {
        let i = k - self.order;
        if i < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(i as usize).copied().unwrap_or_default()
    }

    /// Product truncated to `nterms` coefficients.
    pub fn mul(&self, other: &Laurent, nterms: usize) -> Laurent {
        let mut out = vec![Complex64::new(0.0, 0.0); nterms];
        for (i, &a) in self.coeffs.iter().enumerate().take(nterms) {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(nterms - i) {
                out[i + j] += a * b;
            }
        }
        Laurent::new(self.order + other.order, out)
    }

    pub fn scale(&self, s: Complex64) -> Laurent {
        Laurent::new(self.order, self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `t^shift * self`
    pub fn shift(&self, shift: i32) -> Laurent {
        Laurent::new(self.order + shift, self.coeffs.clone())
    }

    /// The coefficient of `t^-1`.
    pub fn residue(&self) -> Complex64 {
        self.coeff(-1)
    }

    /// Lowest index whose coefficient exceeds `rel` times the largest
    /// stored magnitude, i.e. the numerically meaningful order.
    pub fn effective_order(&self, rel: f64) -> Option<i32> {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        self.coeffs
            .iter()
            .position(|c| c.norm() > rel * max)
            .map(|i| self.order + i as i32)
    }
}

/// Taylor coefficients of `1/(t + d)^m` around `t = 0`.
pub(crate) fn inverse_power_series(d: Complex64, m: u32, nterms: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(nterms);
    let lead = d.powi(-(m as i32));
    let ratio = -d.inv();
    // binom(-m, j) (1/d)^j = prod_{i<j} (-(m+i)/(i+1)) / d^j
    let mut c = lead;
    for j in 0..nterms {
        out.push(c);
        c = c * ratio * ((m as f64 + j as f64) / (j as f64 + 1.0));
    }
    out
}

/// Power series quotient `num / den` with `den[0] != 0`, `nterms` terms.
pub(crate) fn series_div(num: &[Complex64], den: &[Complex64], nterms: usize) -> Vec<Complex64> {
    let d0 = den[0];
    let mut q = vec![Complex64::new(0.0, 0.0); nterms];
    for k in 0..nterms {
        let mut acc = num.get(k).copied().unwrap_or_default();
        for j in 1..=k.min(den.len().saturating_sub(1)) {
            acc -= den[j] * q[k - j];
        }
        q[k] = acc / d0;
    }
    q
}
