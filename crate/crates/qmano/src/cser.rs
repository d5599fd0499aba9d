//! Serde helpers encoding complex numbers as two-element arrays `[re, im]`.

use crate::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

fn to_pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn from_pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// A single complex number.
pub mod c64 {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        to_pair(z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        <[f64; 2]>::deserialize(d).map(from_pair)
    }
}

/// A vector of complex numbers.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(from_pair).collect())
    }
}

/// A fixed-size array of complex numbers.
pub mod arr {
    use super::*;
    use serde::de::Error;

    pub fn serialize<S: Serializer, const N: usize>(v: &[C64; N], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[C64; N], D::Error> {
        let v = Vec::<[f64; 2]>::deserialize(d)?;
        if v.len() != N {
            return Err(D::Error::custom(format!("expected {N} complex numbers, got {}", v.len())));
        }
        let mut out = [C64::new(0.0, 0.0); N];
        for (o, p) in out.iter_mut().zip(v) {
            *o = from_pair(p);
        }
        Ok(out)
    }
}

/// A 2x2 complex matrix as nested arrays.
pub mod mat2 {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[[C64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m.iter().map(|r| r.iter().map(to_pair).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[C64; 2]; 2], D::Error> {
        let rows = <[[[f64; 2]; 2]; 2]>::deserialize(d)?;
        Ok([
            [from_pair(rows[0][0]), from_pair(rows[0][1])],
            [from_pair(rows[1][0]), from_pair(rows[1][1])],
        ])
    }
}
