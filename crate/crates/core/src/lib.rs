//! Numerical laboratory for flows on Legendrian loops over explicit contact
//! 3-manifolds.
//!
//! The crate is organised around a handful of cooperating subsystems:
//!
//! * [`manifold`] — evaluable contact models (the round `S^3`, the `T^3`
//!   family, an overtwisted `S^3` slot) together with frame fields, the
//!   structure scalars `tau`, `mubar`, and assumption checkers.
//! * [`spectral`] — Fourier-multiplier operators on the unit-period circle:
//!   the elliptic mollifier, the (regularised) heat semigroup, a Duhamel
//!   integrator and Sobolev norms.
//! * [`loops`] — discrete closed curves, their frame decomposition
//!   `x' = a xi + b v + c [xi,v]`, and membership tests for the Legendrian
//!   loop spaces.
//! * [`variation`] — the pointwise evolution formulas for `(a, b, c)` under
//!   a deformation field, shared by every flow below.
//! * [`regflow`] — the mollified regularisation flow and its limiting
//!   diffusion system.
//! * [`lifting`] — transport along the kernel field `v`, lifting of
//!   negative-`a` arcs, and the gradual cancellation of (nearly) Dirac
//!   masses.
//! * [`pushflow`] — the fixed-point construction that turns nonnegative `a`
//!   strictly positive via `da/ds = a'' + c a^2`.
//!
//! Everything here is `no_std`-compatible (with `alloc`); IO, file formats
//! and the command line live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod expr;
pub mod fft;
pub mod lifting;
pub mod linalg;
pub mod loops;
pub mod manifold;
pub mod pushflow;
pub mod regflow;
pub mod spectral;
pub mod synth;
pub mod variation;

pub use error::CoreError;
