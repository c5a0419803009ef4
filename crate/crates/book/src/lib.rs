//! The guide's chapters, included as module docs so `cargo test` runs every listing
//! in `book/src` as a doc-test against the real library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/clustering.md")]
pub mod clustering {}

#[doc = include_str!("../../../book/src/construction.md")]
pub mod construction {}

#[doc = include_str!("../../../book/src/improvement.md")]
pub mod improvement {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
