use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bit-length cap for any power materialized as a full integer.
pub const DEFAULT_BIT_CAP: u64 = 1 << 26;

/// A validated pair of co-prime integers with `1 < a < b`.
///
/// Equality and hashing only look at `a` and `b`; the bit cap is a resource
/// setting carried along with the pair, not part of its identity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Params {
    a: u64,
    b: u64,
    #[serde(skip, default = "default_cap")]
    bit_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_BIT_CAP
}

impl Params {
    pub fn new(a: u64, b: u64) -> Result<Self> {
        if a <= 1 {
            return Err(Error::OrderViolation {
                a,
                b,
                clause: "a must be greater than 1",
            });
        }
        if b <= a {
            return Err(Error::OrderViolation {
                a,
                b,
                clause: "b must be greater than a",
            });
        }
        let gcd = a.gcd(&b);
        if gcd != 1 {
            return Err(Error::NotCoprime { a, b, gcd });
        }
        Ok(Params {
            a,
            b,
            bit_cap: DEFAULT_BIT_CAP,
        })
    }

    /// Same pair with a different cap on materialized power sizes.
    pub fn with_bit_cap(mut self, bits: u64) -> Self {
        self.bit_cap = bits;
        self
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn bit_cap(&self) -> u64 {
        self.bit_cap
    }

    pub(crate) fn ensure_same(&self, other: &Params) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ParamsMismatch {
                left: (self.a, self.b),
                right: (other.a, other.b),
            })
        }
    }
}

impl PartialEq for Params {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl Eq for Params {}

impl std::hash::Hash for Params {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.a, self.b).hash(state);
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a = {}, b = {})", self.a, self.b)
    }
}
