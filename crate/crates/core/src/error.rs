use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("a = {a} and b = {b} are not co-prime (gcd = {gcd})")]
    NotCoprime { a: u64, b: u64, gcd: u64 },

    #[error("parameters must satisfy 1 < a < b, got a = {a}, b = {b}: {clause}")]
    OrderViolation {
        a: u64,
        b: u64,
        clause: &'static str,
    },

    #[error("elements belong to different parameter pairs ({left:?} vs {right:?})")]
    ParamsMismatch { left: (u64, u64), right: (u64, u64) },

    #[error("a power of {bits} bits exceeds the bit-length cap of {cap} bits")]
    ResourceLimit { bits: u64, cap: u64 },

    #[error("value is outside the admissible range: {0}")]
    OutOfRange(String),

    #[error("target is the element with p = {p}; use the exact hit")]
    TargetInF { p: BigUint },

    #[error("sequence prefix too short: {0}")]
    TooShort(String),

    #[error("invalid element: p = {p}, d = {d} is not in the set for these parameters")]
    InvalidElement { p: BigUint, d: BigUint },

    #[error("not a pair sequence: {0}")]
    InvalidSequence(String),

    #[error("cannot parse rational {input:?}: {reason}")]
    ParseRational { input: String, reason: String },
}
