use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::cpair::Pair;

/// Tolerance under which two finite points are the same point.
pub const TAU_GCD: f64 = 1e-8;

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointExt {
    Finite(Complex64),
    Infinity,
}

impl PointExt {
    pub fn finite(re: f64, im: f64) -> Self {
        PointExt::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PointExt::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            PointExt::Finite(z) => Some(*z),
            PointExt::Infinity => None,
        }
    }

    /// Same point up to [`TAU_GCD`] (relative for large moduli).
    pub fn approx_eq(&self, other: &PointExt) -> bool {
        match (self, other) {
            (PointExt::Infinity, PointExt::Infinity) => true,
            (PointExt::Finite(a), PointExt::Finite(b)) => same_point(*a, *b),
            _ => false,
        }
    }

    /// Lexicographic on `(re, im)`, infinity last.
    pub fn lex_cmp(&self, other: &PointExt) -> Ordering {
        match (self, other) {
            (PointExt::Infinity, PointExt::Infinity) => Ordering::Equal,
            (PointExt::Infinity, _) => Ordering::Greater,
            (_, PointExt::Infinity) => Ordering::Less,
            (PointExt::Finite(a), PointExt::Finite(b)) => lex_cmp(*a, *b),
        }
    }
}

pub fn same_point(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= TAU_GCD * a.norm().max(b.norm()).max(1.0)
}

pub fn lex_cmp(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

impl From<Complex64> for PointExt {
    fn from(z: Complex64) -> Self {
        PointExt::Finite(z)
    }
}

impl fmt::Display for PointExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointExt::Finite(z) => write!(f, "{z}"),
            PointExt::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for PointExt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PointExt::Finite(z) => Pair::from(*z).serialize(s),
            PointExt::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PointExt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Ok(PointExt::finite(re, im)),
            Repr::Tag(t) if t == "inf" => Ok(PointExt::Infinity),
            Repr::Tag(t) => Err(de::Error::custom(format!("expected [re, im] or \"inf\", got {t:?}"))),
        }
    }
}

/// Finite formal sum of points with nonzero integer multiplicities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Divisor {
    entries: Vec<(PointExt, i32)>,
}

impl Divisor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (PointExt, i32)>) -> Self {
        let mut d = Divisor::new();
        for (p, m) in entries {
            d.add(p, m);
        }
        d
    }

    /// Adds `mult * point`, merging with an existing entry for the same point.
    pub fn add(&mut self, point: PointExt, mult: i32) {
        if let Some(i) = self.entries.iter().position(|(q, _)| q.approx_eq(&point)) {
            self.entries[i].1 += mult;
            if self.entries[i].1 == 0 {
                self.entries.remove(i);
            }
        } else if mult != 0 {
            let at = self
                .entries
                .partition_point(|(q, _)| q.lex_cmp(&point) == Ordering::Less);
            self.entries.insert(at, (point, mult));
        }
    }

    pub fn entries(&self) -> &[(PointExt, i32)] {
        &self.entries
    }

    pub fn points(&self) -> impl Iterator<Item = PointExt> + '_ {
        self.entries.iter().map(|(p, _)| *p)
    }

    pub fn finite_points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.entries.iter().filter_map(|(p, _)| p.as_finite())
    }

    pub fn get(&self, point: &PointExt) -> i32 {
        self.entries
            .iter()
            .find(|(q, _)| q.approx_eq(point))
            .map_or(0, |(_, m)| *m)
    }

    pub fn contains_infinity(&self) -> bool {
        self.entries.iter().any(|(p, _)| p.is_infinite())
    }

    pub fn degree(&self) -> i32 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
