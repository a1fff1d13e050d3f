//! Exact Gröbner–Shirshov bases for free associative algebras, modules over
//! them, associative conformal algebras and universal envelopes of Lie
//! conformal algebras.

pub mod conformal;
pub mod error;
pub mod gsb;
pub mod io;
pub mod lie;
pub mod module;
pub mod oracle;
pub mod poly;
pub mod rewrite;
pub mod scalar;
pub mod schema;
pub mod word;

pub use error::{Error, Result};
pub use poly::Polynomial;
pub use scalar::Scalar;
pub use word::{Alphabet, Gen, Label, OrderSpec, Word};
