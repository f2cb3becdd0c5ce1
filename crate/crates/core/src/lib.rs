//! The expression `l(u) = (u1' + A1 u1, u2' + A2 u2)` on the rays
//! `(-inf, a]` and `[b, inf)`: boundary values of `-i d/dt`, the extensions
//! `L_W` fixed by a unitary coupling of the endpoint traces, and numerical
//! spectral probes.
//!
//! Validation of real inputs uses negated comparisons such as `!(x > 0.0)` so
//! that NaN is rejected together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod exec;
pub mod extension;
pub mod heat;
pub mod models;
pub mod operator;
pub mod ray;
pub mod spectral;
