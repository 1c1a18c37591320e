use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laurent::{inverse_power_series, series_div, Laurent};
use super::point::{lex_cmp, same_point, Divisor, PointExt, TAU_GCD};
use super::poly::Poly;
use super::roots::{poly_roots, TAU_CLUSTER};
use crate::error::{Error, Result};

/// Relative size under which a leading coefficient produced by a cancelling
/// sum is treated as an exact zero.
const TRIM_REL: f64 = 1e-14;

/// Quotient of two complex polynomials in reduced, normalised form.
///
/// The denominator is monic and kept together with its factorisation
/// `prod (z - p)^k`, so poles and pole orders of constructed data are known
/// exactly. Numerator and denominator share no root within [`TAU_GCD`].
/// When the numerator was built from known roots those are kept as well and
/// evaluation uses the product form.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct RationalFn {
    num: Poly,
    den: Poly,
    poles: Vec<(Complex64, u32)>,
    zeros: Option<Vec<(Complex64, u32)>>,
}

impl PartialEq for RationalFn {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.poles == other.poles
    }
}

#[derive(Serialize, Deserialize)]
struct Repr {
    num: Poly,
    den: Poly,
}

impl TryFrom<Repr> for RationalFn {
    type Error = Error;
    fn try_from(r: Repr) -> Result<Self> {
        RationalFn::new(r.num, r.den)
    }
}

impl From<RationalFn> for Repr {
    fn from(f: RationalFn) -> Self {
        Repr {
            num: f.num,
            den: f.den,
        }
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// True when `num` has a root within [`TAU_GCD`] of `p`, or `num(p)` is at
/// rounding level.
fn has_root_near(num: &Poly, p: Complex64) -> bool {
    let t = num.taylor_at(p);
    let c0 = t.coeff(0).norm();
    if c0 == 0.0 {
        return true;
    }
    if c0 <= 64.0 * f64::EPSILON * num.eval_scale(p) {
        return true;
    }
    let radius = t
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(j, c)| (c0 / c.norm()).powf(1.0 / j as f64))
        .fold(f64::INFINITY, f64::min);
    radius <= TAU_GCD * p.norm().max(1.0)
}

fn merge_points(a: &[(Complex64, u32)], b: &[(Complex64, u32)], combine: fn(u32, u32) -> u32) -> Vec<(Complex64, u32)> {
    let mut out: Vec<(Complex64, u32)> = a.to_vec();
    let mut seen = vec![false; out.len()];
    for &(q, m) in b {
        if let Some(i) = out.iter().position(|(p, _)| same_point(*p, q)) {
            out[i].1 = combine(out[i].1, m);
            seen[i] = true;
        } else {
            out.push((q, combine(0, m)));
            seen.push(true);
        }
    }
    for (i, s) in seen.iter().enumerate() {
        if !s {
            out[i].1 = combine(out[i].1, 0);
        }
    }
    out.retain(|(_, k)| *k > 0);
    out
}

/// `prod (z - p)^(L_p - k_p)` turning a denominator with poles `part` into
/// the common denominator `lcm`.
fn cofactor(lcm: &[(Complex64, u32)], part: &[(Complex64, u32)]) -> Poly {
    let missing: Vec<(Complex64, u32)> = lcm
        .iter()
        .map(|&(p, l)| {
            let k = part.iter().find(|(q, _)| same_point(p, *q)).map_or(0, |x| x.1);
            (p, l - k)
        })
        .collect();
    Poly::from_roots(&missing)
}

impl RationalFn {
    /// `num / den`; the denominator is factored numerically.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::invalid("rational function with zero denominator"));
        }
        let lead = den.leading();
        let roots = poly_roots(&den)?;
        Ok(Self::from_parts(num.scale(lead.inv()), roots))
    }

    /// `num / prod (z - p)^k`, cancelling common factors.
    pub fn from_parts(num: Poly, poles: Vec<(Complex64, u32)>) -> Self {
        Self::reduce(num, poles, |_| true)
    }

    /// [`RationalFn::from_parts`], testing for common factors only at the
    /// poles accepted by `candidate`.
    fn reduce(num: Poly, poles: Vec<(Complex64, u32)>, candidate: impl Fn(Complex64) -> bool) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let mut poles = merge_points(&[], &poles, |a, b| a + b);
        let mut num = num;
        for (p, k) in poles.iter_mut() {
            if !candidate(*p) {
                continue;
            }
            while *k > 0 && num.degree().unwrap_or(0) > 0 && has_root_near(&num, *p) {
                num = num.deflate(*p);
                *k -= 1;
            }
        }
        poles.retain(|(_, k)| *k > 0);
        poles.sort_by(|a, b| lex_cmp(a.0, b.0));
        let den = Poly::from_roots(&poles);
        RationalFn {
            num,
            den,
            poles,
            zeros: None,
        }
    }

    /// `lead * prod (z - zero)^m / prod (z - pole)^k`.
    pub fn from_factors(lead: Complex64, zeros: &[(Complex64, u32)], poles: &[(Complex64, u32)]) -> Self {
        if lead == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        let mut zeros = merge_points(&[], zeros, |a, b| a + b);
        let mut poles = merge_points(&[], poles, |a, b| a + b);
        for (z, m) in zeros.iter_mut() {
            for (p, k) in poles.iter_mut() {
                if same_point(*z, *p) {
                    let c = (*m).min(*k);
                    *m -= c;
                    *k -= c;
                }
            }
        }
        zeros.retain(|x| x.1 > 0);
        poles.retain(|x| x.1 > 0);
        zeros.sort_by(|a, b| lex_cmp(a.0, b.0));
        poles.sort_by(|a, b| lex_cmp(a.0, b.0));
        RationalFn {
            num: Poly::from_roots(&zeros).scale(lead),
            den: Poly::from_roots(&poles),
            poles,
            zeros: Some(zeros),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFn {
            num: p,
            den: Poly::one(),
            poles: Vec::new(),
            zeros: None,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_factors(c, &[], &[])
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    /// The coordinate function `z`.
    pub fn identity() -> Self {
        Self::from_poly(Poly::monomial(one(), 1))
    }

    /// `c * z^k`
    pub fn monomial(c: Complex64, k: usize) -> Self {
        Self::from_factors(c, &[(Complex64::new(0.0, 0.0), k as u32)], &[])
    }

    /// `1 / (z - p)^k`
    pub fn inverse_power(p: Complex64, k: u32) -> Self {
        Self::from_factors(one(), &[], &[(p, k)])
    }

    /// `(a z + b) / (c z + d)`
    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(Error::invalid("degenerate Mobius transformation"));
        }
        Self::new(Poly::new(vec![b, a]), Poly::new(vec![d, c]))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    /// Finite poles with orders, lexicographically ordered.
    pub fn poles(&self) -> &[(Complex64, u32)] {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.poles.is_empty() && self.num.degree().unwrap_or(0) == 0
    }

    pub fn num_degree(&self) -> Option<usize> {
        self.num.degree()
    }

    pub fn den_degree(&self) -> usize {
        self.poles.iter().map(|(_, k)| *k as usize).sum()
    }

    /// Order of the pole at the finite point `z` (0 when regular).
    pub fn pole_order_at(&self, z: Complex64) -> u32 {
        self.poles
            .iter()
            .find(|(p, _)| same_point(*p, z))
            .map_or(0, |x| x.1)
    }

    pub fn has_pole_at_infinity(&self) -> bool {
        self.num_degree().is_some_and(|dn| dn > self.den_degree())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let den: Complex64 = self
            .poles
            .iter()
            .map(|&(p, k)| (z - p).powi(k as i32))
            .product();
        let num = match &self.zeros {
            Some(zs) if !self.num.is_zero() => {
                self.num.leading() * zs.iter().map(|&(r, m)| (z - r).powi(m as i32)).product::<Complex64>()
            }
            _ => self.num.eval(z),
        };
        num / den
    }

    /// Value on the sphere, `None` at a pole.
    pub fn value_at(&self, p: PointExt) -> Option<Complex64> {
        match p {
            PointExt::Finite(z) => {
                if self.pole_order_at(z) > 0 {
                    None
                } else {
                    Some(self.eval(z))
                }
            }
            PointExt::Infinity => {
                let dd = self.den_degree();
                match self.num_degree() {
                    None => Some(Complex64::new(0.0, 0.0)),
                    Some(dn) if dn < dd => Some(Complex64::new(0.0, 0.0)),
                    Some(dn) if dn == dd => Some(self.num.leading()),
                    Some(_) => None,
                }
            }
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        RationalFn {
            num: self.num.scale(s),
            den: self.den.clone(),
            poles: self.poles.clone(),
            zeros: self.zeros.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lcm = merge_points(&self.poles, &other.poles, u32::max);
        let a = &self.num * &cofactor(&lcm, &self.poles);
        let b = &other.num * &cofactor(&lcm, &other.poles);
        // only a pole of equal order in both terms can cancel
        let both = |p: Complex64| self.pole_order_at(p) == other.pole_order_at(p);
        Self::reduce((&a + &b).trimmed(TRIM_REL), lcm, both)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let poles = merge_points(&self.poles, &other.poles, |a, b| a + b);
        if let (Some(za), Some(zb)) = (&self.zeros, &other.zeros) {
            let zeros = merge_points(za, zb, |a, b| a + b);
            return Self::from_factors(self.num.leading() * other.num.leading(), &zeros, &poles);
        }
        // cancel against each numerator separately; the expanded product
        // loses a near root of either factor to rounding
        let mut poles = poles;
        let (mut a, mut b) = (self.num.clone(), other.num.clone());
        for (p, k) in poles.iter_mut() {
            for n in [&mut a, &mut b] {
                while *k > 0 && n.degree().unwrap_or(0) > 0 && has_root_near(n, *p) {
                    *n = n.deflate(*p);
                    *k -= 1;
                }
            }
        }
        poles.retain(|(_, k)| *k > 0);
        poles.sort_by(|a, b| lex_cmp(a.0, b.0));
        let den = Poly::from_roots(&poles);
        RationalFn {
            num: &a * &b,
            den,
            poles,
            zeros: None,
        }
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::constant(one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::invalid("reciprocal of the zero function"));
        }
        let lead = self.num.leading();
        let roots = self.zeros()?;
        Ok(Self::from_factors(lead.inv(), &self.poles, &roots))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::invalid("division by the zero function"));
        }
        Ok(self.mul(&other.recip()?))
    }

    /// `self(inner(z))`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.is_constant() {
            let w = inner.num.coeff(0);
            return self
                .value_at(PointExt::Finite(w))
                .map(Self::constant)
                .ok_or_else(|| Error::invalid("composition evaluates the outer function at a pole"));
        }
        if self.is_constant() {
            return Ok(self.clone());
        }
        // self = lead * prod (w - z_i) / prod (w - p_j)
        let mut out = Self::constant(self.num.leading());
        for (z, m) in self.zeros()? {
            out = out.mul(&inner.shifted(z)?.powi(m));
        }
        for &(p, k) in &self.poles {
            out = out.mul(&inner.shifted(p)?.recip()?.powi(k));
        }
        Ok(out)
    }

    /// `self - c` in factored form.
    fn shifted(&self, c: Complex64) -> Result<Self> {
        let num = (&self.num - &self.den.scale(c)).trimmed(TRIM_REL);
        if num.is_zero() {
            return Err(Error::invalid("composition degenerates to a constant factor"));
        }
        let zeros = poly_roots(&num)?;
        Ok(Self::from_factors(num.leading(), &zeros, &self.poles))
    }

    pub fn derivative(&self) -> Self {
        if self.poles.is_empty() {
            return Self::from_poly(self.num.derivative());
        }
        // N/prod(z-p)^k  ->  (N' S - N sum_j k_j S/(z-p_j)) / prod (z-p)^(k+1)
        let simple: Vec<(Complex64, u32)> = self.poles.iter().map(|&(p, _)| (p, 1)).collect();
        let s = Poly::from_roots(&simple);
        let mut term = Poly::zero();
        for (j, &(_, k)) in self.poles.iter().enumerate() {
            let others: Vec<(Complex64, u32)> = simple
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, x)| *x)
                .collect();
            term = &term + &Poly::from_roots(&others).scale(Complex64::new(k as f64, 0.0));
        }
        let num = (&(&self.num.derivative() * &s) - &(&self.num * &term)).trimmed(TRIM_REL);
        let poles = self.poles.iter().map(|&(p, k)| (p, k + 1)).collect();
        Self::from_parts(num, poles)
    }

    /// Laurent expansion at `p` with `nterms` coefficients starting at the
    /// pole order (order 0 at regular points).
    pub fn laurent(&self, p: PointExt, nterms: usize) -> Laurent {
        match p {
            PointExt::Finite(z0) => {
                let mut k = 0;
                let taylor = self.num.taylor_at(z0);
                let mut series: Vec<Complex64> = (0..nterms).map(|i| taylor.coeff(i)).collect();
                for &(q, m) in &self.poles {
                    if same_point(q, z0) {
                        k = m;
                        continue;
                    }
                    let inv = inverse_power_series(z0 - q, m, nterms);
                    series = Laurent::new(0, series).mul(&Laurent::new(0, inv), nterms).coeffs;
                }
                Laurent::new(-(k as i32), series)
            }
            PointExt::Infinity => {
                let Some(dn) = self.num.degree() else {
                    return Laurent::new(0, vec![Complex64::new(0.0, 0.0); nterms]);
                };
                let dd = self.den_degree();
                let rev_num: Vec<Complex64> = (0..=dn).map(|j| self.num.coeff(dn - j)).collect();
                let rev_den: Vec<Complex64> = (0..=dd).map(|j| self.den.coeff(dd - j)).collect();
                Laurent::new(dd as i32 - dn as i32, series_div(&rev_num, &rev_den, nterms))
            }
        }
    }

    /// Laurent expansion of the 1-form `self * dz` in the local coordinate.
    pub fn form_laurent(&self, p: PointExt, nterms: usize) -> Laurent {
        match p {
            PointExt::Finite(_) => self.laurent(p, nterms),
            // dz = -dw / w^2
            PointExt::Infinity => self.laurent(p, nterms).scale(-one()).shift(-2),
        }
    }

    /// Lower bound on the order at `p` used to size Laurent expansions.
    pub(crate) fn order_bound(&self, p: PointExt) -> i32 {
        match p {
            PointExt::Finite(z) => -(self.pole_order_at(z) as i32),
            PointExt::Infinity => self.den_degree() as i32 - self.num_degree().unwrap_or(0) as i32,
        }
    }

    /// Order of the function at `p`: positive for zeros, negative for poles.
    pub fn order_at(&self, p: PointExt) -> Result<i32> {
        if self.is_zero() {
            return Err(Error::invalid("order of the zero function"));
        }
        match p {
            PointExt::Infinity => Ok(self.order_bound(p)),
            PointExt::Finite(z) => {
                let k = self.pole_order_at(z);
                if k > 0 {
                    return Ok(-(k as i32));
                }
                if self.num.degree() == Some(0) {
                    return Ok(0);
                }
                let tol = TAU_CLUSTER.max(TAU_GCD) * z.norm().max(1.0);
                Ok(self
                    .zeros()?
                    .iter()
                    .filter(|(r, _)| (r - z).norm() <= tol)
                    .map(|(_, m)| *m as i32)
                    .sum())
            }
        }
    }

    /// Order of the 1-form `self * dz` at `p`.
    pub fn form_order_at(&self, p: PointExt) -> Result<i32> {
        let o = self.order_at(p)?;
        Ok(if p.is_infinite() { o - 2 } else { o })
    }

    /// Residue of the 1-form `self * dz` at `p`.
    pub fn residue_at(&self, p: PointExt) -> Complex64 {
        residue_of_product(&[self], p)
    }

    /// Sum of the residues of `self * dz` over the sphere; zero up to rounding.
    pub fn residue_sum_check(&self) -> Complex64 {
        let finite: Complex64 = self
            .poles
            .iter()
            .map(|&(p, _)| self.residue_at(PointExt::Finite(p)))
            .sum();
        finite + self.residue_at(PointExt::Infinity)
    }

    /// Finite zeros with multiplicities.
    pub fn zeros(&self) -> Result<Vec<(Complex64, u32)>> {
        match &self.zeros {
            Some(z) => Ok(z.clone()),
            None => poly_roots(&self.num),
        }
    }

    /// Divisor of zeros minus poles on the sphere.
    pub fn divisor(&self) -> Result<Divisor> {
        let mut d = Divisor::new();
        for (z, m) in self.zeros()? {
            d.add(PointExt::Finite(z), m as i32);
        }
        for &(p, k) in &self.poles {
            d.add(PointExt::Finite(p), -(k as i32));
        }
        d.add(PointExt::Infinity, self.order_at(PointExt::Infinity)?);
        Ok(d)
    }
}

/// Residue at `p` of the 1-form `prod(factors) * dz`, computed from the
/// Laurent expansions of the factors so that nothing is cancelled
/// numerically before the product is formed.
pub fn residue_of_product(factors: &[&RationalFn], p: PointExt) -> Complex64 {
    if factors.iter().any(|f| f.is_zero()) {
        return Complex64::new(0.0, 0.0);
    }
    let form = match p {
        PointExt::Finite(_) => Laurent::new(0, vec![one()]),
        PointExt::Infinity => Laurent::new(-2, vec![-one()]),
    };
    let total: i32 = form.order + factors.iter().map(|f| f.order_bound(p)).sum::<i32>();
    if total >= 0 {
        return Complex64::new(0.0, 0.0);
    }
    let n = (-total) as usize;
    let mut acc = form;
    for f in factors {
        acc = acc.mul(&f.laurent(p, n), n);
    }
    acc.residue()
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poles.is_empty() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}
