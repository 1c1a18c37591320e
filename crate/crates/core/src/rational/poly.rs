use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cpair;

/// Dense complex polynomial, coefficients in ascending degree.
///
/// Trailing zero coefficients are stripped on construction, so a nonzero
/// polynomial always has a nonzero leading coefficient. The zero polynomial
/// has an empty coefficient vector and degree `None` (minus infinity).
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<cpair::Pair>", into = "Vec<cpair::Pair>")]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// `c * z^k`
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    /// The monic polynomial `prod (z - r)^m`.
    pub fn from_roots(roots: &[(Complex64, u32)]) -> Self {
        let mut p = Poly::one();
        for &(r, m) in roots {
            let factor = Poly::new(vec![-r, Complex64::new(1.0, 0.0)]);
            for _ in 0..m {
                p = &p * &factor;
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` stands for the degree of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of `|a_k| |z|^k`, the rounding scale of [`Poly::eval`] at `z`.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Coefficients of `t -> p(center + t)`.
    pub fn taylor_at(&self, center: Complex64) -> Poly {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = c[j + 1];
                c[j] += center * next;
            }
        }
        Poly::new(c)
    }

    /// Divides by `(z - root)` discarding the remainder.
    pub fn deflate(&self, root: Complex64) -> Poly {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly::zero();
        }
        let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..n).rev() {
            acc = acc * root + self.coeffs[k];
            q[k - 1] = acc;
        }
        Poly::new(q)
    }

    /// Euclidean division `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.coeffs.len() - 1;
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![Complex64::new(0.0, 0.0); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = r[k + dd] / lead;
            q[k] = c;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                r[k + j] -= c * dj;
            }
            r[k + dd] = Complex64::new(0.0, 0.0);
        }
        r.truncate(dd);
        (Poly::new(q), Poly::new(r))
    }

    /// Drops leading coefficients below `rel` times the largest magnitude.
    /// Used after cancelling sums, where the exact leading term is zero but
    /// rounding leaves a residue.
    pub fn trimmed(mut self, rel: f64) -> Poly {
        let cut = rel * self.max_abs_coeff();
        while self.coeffs.last().is_some_and(|c| c.norm() <= cut) {
            self.coeffs.pop();
        }
        self
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})z"),
                _ => format!("({c})z^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl From<Vec<cpair::Pair>> for Poly {
    fn from(v: Vec<cpair::Pair>) -> Self {
        Poly::new(v.into_iter().map(Complex64::from).collect())
    }
}

impl From<Poly> for Vec<cpair::Pair> {
    fn from(p: Poly) -> Self {
        p.coeffs.into_iter().map(cpair::Pair::from).collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_has_no_degree() {
        assert_eq!(Poly::zero().degree(), None);
        assert_eq!(Poly::new(vec![c(0.0, 0.0); 4]).degree(), None);
        assert_eq!(Poly::from_real(&[1.0, 0.0, 2.0, 0.0]).degree(), Some(2));
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = Poly::from_real(&[3.0, -1.0, 0.5, 2.0]);
        let center = c(0.7, -0.2);
        let t = p.taylor_at(center);
        let h = c(0.13, 0.4);
        assert!((t.eval(h) - p.eval(center + h)).norm() < 1e-13);
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = Poly::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let d = Poly::new(vec![c(1.0, 1.0), c(0.0, 2.0), c(1.0, 0.0)]);
        let (q, r) = a.div_rem(&d);
        assert!(r.degree().unwrap() < 2);
        let back = &(&q * &d) + &r;
        for k in 0..5 {
            assert!((back.coeff(k) - a.coeff(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn deflate_removes_exact_root() {
        let p = Poly::from_roots(&[(c(2.0, 0.0), 1), (c(0.0, 1.0), 2)]);
        let q = p.deflate(c(2.0, 0.0));
        assert_eq!(q.degree(), Some(2));
        assert!(q.eval(c(0.0, 1.0)).norm() < 1e-14);
    }
}
