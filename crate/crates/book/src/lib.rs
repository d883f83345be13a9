//! The guide's chapters, compiled as doctests so the listings stay current.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/elements.md")]
pub mod elements {}
#[doc = include_str!("../../../book/src/records.md")]
pub mod records {}
#[doc = include_str!("../../../book/src/phases.md")]
pub mod phases {}
#[doc = include_str!("../../../book/src/density.md")]
pub mod density {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
