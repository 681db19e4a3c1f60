//! Exact scalar and matrix arithmetic.
//!
//! The scalar tower: [`Rational`] (arbitrary precision, always reduced),
//! [`UnitScalar`] (nonzero complex numbers `r * e^(2*pi*i*theta)` with `r`
//! a positive rational and `theta` rational, the only eigenvalues accepted),
//! and [`CycScalar`] (elements of `Q(zeta_N)` as coefficient vectors reduced
//! against the `N`-th cyclotomic polynomial). [`CycMatrix`] provides exact
//! linear algebra over `Q(zeta_N)`: rank, kernel, inverse, determinant and
//! linear solving, all by fraction-exact Gaussian elimination.

mod cyclotomic;
mod matrix;
mod rational;
mod unit;

pub use cyclotomic::{cyclotomic_polynomial, euler_phi, CycScalar};
pub use matrix::CycMatrix;
pub use rational::Rational;
pub use unit::UnitScalar;
