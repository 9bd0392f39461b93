//! Pseudorandom generators from compatible 2-adic maps: exact words,
//! an expression language for laws, ergodicity verification, generator
//! constructions, sequence analysis and a small stream cipher.

pub mod analyze;
pub mod cipher;
pub mod expr;
pub mod gen;
pub mod verify;
pub mod words;

pub use expr::{parse, Expr};
pub use words::{BitSeq, Word};
