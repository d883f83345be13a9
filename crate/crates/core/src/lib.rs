//! Exact arithmetic on the multiplicative ladder `a^q / b^p` folded into `[1, a)`.
//!
//! The crate covers the ladder elements and their product law, the record
//! holders of the ladder and the pair sequence that generates them, the phase
//! structure of that sequence, and greedy approximation of rationals by
//! products of record holders.

mod bigser;
pub mod decimal;
pub mod density;
pub mod element;
pub mod error;
mod fixed_log;
pub mod params;
pub mod phases;
pub mod power;
pub mod records;
pub mod verify;

pub use element::{BigRatio, Element, ElementRepr, ProductClass, SignedElement};
pub use error::{Error, Result};
pub use params::{Params, DEFAULT_BIT_CAP};
pub use power::PowerProduct;
