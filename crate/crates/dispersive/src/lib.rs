//! Time-periodic boundary forcing for linear dispersive equations
//!
//! u_t + Ω(−i∂x)u = 0 on [0,1], Ω(k) = a·k^N, with boundary data periodic in time.
//! The pieces:
//!
//! - [`model`]: the symbol, its polynomials c_j, denominator roots, boundary data.
//! - [`dtn`]: per-mode linear systems fixing the unknown boundary coefficients.
//! - [`detfun`]: exponential-polynomial determinants for the Stokes families and their zeros.
//! - [`periodic`]: mode profiles U_n, the datum u_T and the periodic solution u₁.
//! - [`homogeneous`]: the remainder u₂ (series or contour integral).
//! - [`problem`]: a preset, its data and u₀, assembled into u = u₁ + u₂.
//! - [`classify`]: periodicity verdicts.
//! - [`oracle`]: an independent Chebyshev time stepper.

// `!(x > 0.0)` is used on purpose: NaN has to fail these guards too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod detfun;
pub mod dtn;
pub mod error;
pub mod homogeneous;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod periodic;
pub mod problem;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Relative tolerance below which an equilibrated determinant counts as singular.
pub const TAU_RES: f64 = 1e-8;
