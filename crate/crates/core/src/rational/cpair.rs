//! `[re, im]` JSON encoding of complex scalars.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Pair(pub [f64; 2]);

impl From<Pair> for Complex64 {
    fn from(p: Pair) -> Self {
        Complex64::new(p.0[0], p.0[1])
    }
}

impl From<Complex64> for Pair {
    fn from(z: Complex64) -> Self {
        Pair([z.re, z.im])
    }
}

/// `#[serde(with = "cpair::single")]` for a lone `Complex64` field.
pub mod single {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Pair::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        Pair::deserialize(d).map(Complex64::from)
    }
}

/// `#[serde(with = "cpair::vec")]` for `Vec<Complex64>`.
pub mod vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<Pair> = v.iter().copied().map(Pair::from).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<Pair>::deserialize(d)?
            .into_iter()
            .map(Complex64::from)
            .collect())
    }
}

/// `#[serde(with = "cpair::option")]` for `Option<Complex64>`.
pub mod option {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(Pair::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
        Ok(Option::<Pair>::deserialize(d)?.map(Complex64::from))
    }
}
