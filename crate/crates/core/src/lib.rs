//! Exact classification and construction of conjugacy classes of
//! two-dimensional integral representations of finite groups over the rings
//! of integers of Q and of quadratic fields, through branches in
//! Bruhat-Tits trees.

#![allow(clippy::needless_range_loop)]

pub mod arith;
pub mod branch;
pub mod config;
pub mod counting;
pub mod ideals;
pub mod localtree;
pub mod matrix;
pub mod numfield;
pub mod synth;

pub use numfield::{FieldTag, Nf, NfElement, QuadraticField};

/// Arbitrary-precision rational numbers.
pub type Rat = num_rational::BigRational;
/// Arbitrary-precision integers.
pub type Int = num_bigint::BigInt;
