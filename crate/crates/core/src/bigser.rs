//! Serde adapter writing big integers as JSON numbers while they fit in a
//! `u64`, and as decimal strings beyond that. Both forms are accepted back.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    match x.to_u64() {
        Some(v) => s.serialize_u64(v),
        None => s.serialize_str(&x.to_string()),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(u64),
    Str(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(BigUint::from(v)),
        Repr::Str(s) => s.parse().map_err(de::Error::custom),
    }
}
