//! Rational points of bounded height on the quartic del Pezzo surface
//! `x0 x1 - x2^2 = x0 x4 - x1 x2 + x3^2 = 0` (singularity type D5), together
//! with the arithmetic and analytic ingredients of its counting asymptotic.

// `!(x > a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod asymptotics;
pub mod constants;
pub mod dirichlet;
pub mod error;
pub mod parallel;
pub mod quadrature;
pub mod surface;
pub mod torsor;

pub use error::{Error, Result};
pub use surface::{CountRecord, Method, SurfacePoint};
pub use torsor::{RegionBounds, TorsorPoint};
