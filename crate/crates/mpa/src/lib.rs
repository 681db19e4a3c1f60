//! Exact decision and construction for the question: given conjugacy classes
//! `C_1, ..., C_k` in `GL_n`, do matrices `A_i` in `C_i` with
//! `A_1 A_2 ... A_k = 1` exist with no common invariant subspace?
//!
//! The decision runs through a star-shaped quiver attached to the class data.
//! Eigenvalues live in the subgroup of `C^*` generated by positive rationals
//! and roots of unity, so every computation is exact: scalars are elements of
//! a cyclotomic field `Q(zeta_N)` represented by rational coefficient vectors.
//!
//! Module map:
//! - [`arith`]: rationals, unit scalars `r * e^(2*pi*i*theta)`, cyclotomic
//!   field elements and exact matrix algebra over them.
//! - [`quiver`]: quivers, the Tits form, reflections and root classification.
//! - [`instance`]: translation of class data into a star quiver with a
//!   dimension vector and multiplicative parameter.
//! - [`criterion`]: root enumeration and the decision procedure.
//! - [`rep`]: representations of the multiplicative preprojective relations,
//!   arrow reversal, order swaps and middle convolution.
//! - [`construct`]: reduction paths, rigid representation building and the
//!   correspondence between representations and matrix tuples.
//! - [`verify`]: independent checks on a claimed solution tuple.

pub mod arith;
pub mod construct;
pub mod criterion;
pub mod error;
pub mod instance;
pub mod quiver;
pub mod rep;
pub mod verify;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
