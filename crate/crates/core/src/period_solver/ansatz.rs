use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rational::{same_point, Divisor, RationalFn};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnsatzKind {
    Basic,
    Correction(Complex64),
    Alternative,
    SimpleEnds,
    Perturbation,
}

/// Candidate functions `basis_u` with coefficient names; the unknown is
/// `sum c_u basis_u`.
#[derive(Clone, Debug)]
pub struct AnsatzFamily {
    pub basis: Vec<RationalFn>,
    pub labels: Vec<String>,
    pub kind: AnsatzKind,
}

impl AnsatzFamily {
    pub fn new(basis: Vec<RationalFn>, labels: Vec<String>, kind: AnsatzKind) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::invalid("empty ansatz family"));
        }
        if basis.len() != labels.len() {
            return Err(Error::invalid("ansatz labels do not match the basis"));
        }
        for i in 0..basis.len() {
            if basis[..i].contains(&basis[i]) {
                return Err(Error::invalid(format!("repeated ansatz element {}", labels[i])));
            }
        }
        Ok(AnsatzFamily { basis, labels, kind })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn require_infinity(poles: &Divisor) -> Result<()> {
    if !poles.contains_infinity() {
        return Err(Error::invalid(
            "pole divisor does not contain infinity; apply normalize_pole_at_infinity first",
        ));
    }
    Ok(())
}

fn check_c(poles: &Divisor, c: Complex64) -> Result<()> {
    if poles.finite_points().any(|p| same_point(p, c)) {
        return Err(Error::invalid(format!("ansatz point c = {c} coincides with a pole")));
    }
    Ok(())
}

/// `sum a_i/(z-p_i)^2 + sum_{j=0}^{2n-2} b_j z^j` over the finite poles `p_i`.
pub fn build_ansatz_basic(poles: &Divisor) -> Result<AnsatzFamily> {
    require_infinity(poles)?;
    let n = poles.len();
    let mut basis = Vec::new();
    let mut labels = Vec::new();
    for (i, p) in poles.finite_points().enumerate() {
        basis.push(RationalFn::inverse_power(p, 2));
        labels.push(format!("a_{}", i + 1));
    }
    for j in 0..=(2 * n - 2) {
        basis.push(RationalFn::monomial(one(), j));
        labels.push(format!("b_{j}"));
    }
    AnsatzFamily::new(basis, labels, AnsatzKind::Basic)
}

/// `sum_{k=1}^{2n} alpha_k / (z-p)^(2+k)`
pub fn build_ansatz_correction(p: Complex64, n: usize) -> Result<AnsatzFamily> {
    if n == 0 {
        return Err(Error::invalid("correction family needs n >= 1"));
    }
    let basis = (1..=2 * n).map(|k| RationalFn::inverse_power(p, 2 + k as u32)).collect();
    let labels = (1..=2 * n).map(|k| format!("alpha_{k}")).collect();
    AnsatzFamily::new(basis, labels, AnsatzKind::Correction(p))
}

/// `h = (z-c)^(2n-2) / prod (z-p_j)^2` for `n >= 2` distinct poles, and the
/// polynomial `z - c` when infinity is the only pole.
pub fn alternative_h(poles: &Divisor, c: Complex64) -> Result<RationalFn> {
    require_infinity(poles)?;
    check_c(poles, c)?;
    let n = poles.len();
    if n == 1 {
        return Ok(RationalFn::from_factors(one(), &[(c, 1)], &[]));
    }
    let den: Vec<(Complex64, u32)> = poles.finite_points().map(|p| (p, 2)).collect();
    Ok(RationalFn::from_factors(one(), &[(c, 2 * n as u32 - 2)], &den))
}

/// `[pre h, pre h^2, ..., pre h^count]`
pub fn family_from_h(
    h: &RationalFn,
    count: usize,
    prefactor: Option<&RationalFn>,
    kind: AnsatzKind,
) -> Result<AnsatzFamily> {
    let mut basis = Vec::with_capacity(count);
    let mut power = RationalFn::constant(one());
    for _ in 0..count {
        power = power.mul(h);
        basis.push(match prefactor {
            Some(pre) => pre.mul(&power),
            None => power.clone(),
        });
    }
    let labels = (1..=count).map(|i| format!("a_{i}")).collect();
    AnsatzFamily::new(basis, labels, kind)
}

/// `[h, h^2, ..., h^(2n)]` with `h` from [`alternative_h`].
pub fn build_ansatz_alternative(poles: &Divisor, c: Complex64) -> Result<AnsatzFamily> {
    let h = alternative_h(poles, c)?;
    family_from_h(&h, 2 * poles.len(), None, AnsatzKind::Alternative)
}

/// `[h^i / prod (z-q_j)^2]` for `i = 1..2m+2n`.
pub fn build_ansatz_simple_ends(poles: &Divisor, simple: &[Complex64], c: Complex64) -> Result<AnsatzFamily> {
    if simple.is_empty() {
        return build_ansatz_alternative(poles, c);
    }
    for (i, q) in simple.iter().enumerate() {
        if poles.finite_points().any(|p| same_point(p, *q)) {
            return Err(Error::invalid(format!("simple end {q} coincides with a pole of g")));
        }
        if simple[..i].iter().any(|r| same_point(*r, *q)) {
            return Err(Error::invalid(format!("simple end {q} is listed twice")));
        }
    }
    let h = alternative_h(poles, c)?;
    let den: Vec<(Complex64, u32)> = simple.iter().map(|&q| (q, 2)).collect();
    let pre = RationalFn::from_factors(one(), &[], &den);
    family_from_h(&h, 2 * simple.len() + 2 * poles.len(), Some(&pre), AnsatzKind::SimpleEnds)
}

/// Appends `z^j / prod (z-q_k)^2` for `j = 0..=2m`. Once `n >= 2`, `h` is
/// bounded at infinity and every `h^i / prod (z-q_k)^2` vanishes there to
/// order `2m`, so without these terms `omega` cannot have a pole at infinity.
pub fn with_infinity_terms(family: AnsatzFamily, poles: &Divisor, simple: &[Complex64]) -> Result<AnsatzFamily> {
    if poles.len() < 2 || simple.is_empty() {
        return Ok(family);
    }
    let den: Vec<(Complex64, u32)> = simple.iter().map(|&q| (q, 2)).collect();
    let (mut basis, mut labels, kind) = (family.basis, family.labels, family.kind);
    for j in 0..=2 * simple.len() {
        basis.push(RationalFn::from_factors(one(), &[(Complex64::new(0.0, 0.0), j as u32)], &den));
        labels.push(format!("b_{j}"));
    }
    AnsatzFamily::new(basis, labels, kind)
}

/// One unit right of the centroid of the finite poles, moved further right
/// while it is within 0.25 of a pole or of a point in `avoid`.
pub fn default_c(poles: &Divisor, avoid: &[Complex64]) -> Complex64 {
    let finite: Vec<Complex64> = poles.finite_points().collect();
    let centroid = if finite.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        finite.iter().sum::<Complex64>() / finite.len() as f64
    };
    let mut c = centroid + 1.0;
    while finite.iter().chain(avoid).any(|p| (p - c).norm() < 0.25) {
        c += 1.0;
    }
    c
}
