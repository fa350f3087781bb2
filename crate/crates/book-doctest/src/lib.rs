//! The guide in `book/` as doc comments, so `cargo test --doc` runs every
//! Rust snippet. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/problem-files.md")]
pub mod problem_files {}
#[doc = include_str!("../../../book/src/core-transformations.md")]
pub mod core_transformations {}
#[doc = include_str!("../../../book/src/factored-pencil.md")]
pub mod factored_pencil {}
#[doc = include_str!("../../../book/src/iteration.md")]
pub mod iteration {}
#[doc = include_str!("../../../book/src/eigenvectors.md")]
pub mod eigenvectors {}
#[doc = include_str!("../../../book/src/accuracy.md")]
pub mod accuracy {}
