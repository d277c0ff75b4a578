//! Numerical laboratory for Brownian motion on the unitary group and the
//! fields built from its characteristic polynomial.
//!
//! The crate has four layers:
//!
//! * sampling and dynamics: Haar unitaries, the geometric Euler scheme for
//!   the matrix diffusion, and the circular Dyson dynamics of the
//!   eigenangles ([`unitary`], [`dyson`]);
//! * Fourier calculus on the circle: symbols, the H^{1/2} pairing, the
//!   Poisson semigroup and linear-statistics predictions ([`symbols`],
//!   [`field`]);
//! * exact determinantal machinery: the multi-time extended kernel, twisted
//!   heat kernels, Fredholm and Toeplitz determinants, Fisher-Hartwig and
//!   Barnes-function asymptotics ([`kernels`], [`fredholm`], [`fh`],
//!   [`special`]);
//! * the cylinder free field and Gaussian multiplicative chaos estimators
//!   ([`chaos`]).
//!
//! Everything is deterministic given a [`rng::SeedTree`]; the crate is
//! `no_std` (with `alloc`) so the heavy drivers can live wherever the caller
//! wants them.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod chaos;
pub mod dyson;
pub mod error;
pub mod fh;
pub mod field;
pub mod fredholm;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod symbols;
pub mod unitary;

pub use error::Error;
pub use num_complex::Complex64;

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// The circle's circumference, used throughout for angle arithmetic.
pub const TWO_PI: f64 = core::f64::consts::TAU;
