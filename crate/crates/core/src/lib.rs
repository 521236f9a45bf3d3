//! Spectral analysis of the radial (l = 0) square-barrier Schrödinger operator
//!
//! ```text
//!   h = -(1/κ) d²/dr² + V(r),   V = V₀ on (a, b), 0 elsewhere,   κ = 2m/ħ²
//! ```
//!
//! on `L²([0, ∞), dr)` with the Dirichlet condition `f(0) = 0`. The crate
//! provides the closed-form eigenfunction families and their matching
//! coefficients, the resolvent kernel in every region of the complex energy
//! plane, the spectral density and the Stone/Titchmarsh–Kodaira measure, the
//! δ-normalized energy transform and its inverse, and the test-function
//! machinery (norm family, Dirac kets) used to verify the spectral identities
//! numerically.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bump;
pub mod eigen;
pub mod error;
pub mod green;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod testspace;
pub mod transform;

pub use error::{Error, Result};
pub use model::{BarrierConfig, ComplexEnergy, EnergyRegion, Wavenumbers};
pub use num_complex::Complex64;
