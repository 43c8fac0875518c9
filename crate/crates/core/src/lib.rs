//! minispec: behavioral contracts for a small C-like language.
//!
//! Sources are parsed and resolved by [`frontend`], executed by
//! [`semantics`], and checked against their contracts by bounded exhaustive
//! enumeration in [`verifier`]. [`thermo`] is the thermistor model used by
//! the temperature-acquisition example in [`corpus`].

pub mod corpus;
pub mod frontend;
pub mod semantics;
pub mod thermo;
pub mod verifier;
