//! Pseudospectral numerics for axisymmetric capillary jets.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every computation of
//! the simulator: the periodic Fourier [`grid`], modified Bessel functions and
//! ratios ([`bessel`]), the cylindrical Dirichlet-Neumann operator ([`dno`]),
//! mean curvature and the Hamiltonian ([`surface`]), the Zakharov time
//! evolution ([`dynamics`]), Rayleigh-Plateau linear stability ([`linstab`])
//! and a discrete paradifferential calculus ([`paradiff`]).
//!
//! File formats, configuration and the command line live in the `capjet`
//! companion crate.

#![no_std]

extern crate alloc;

pub mod bessel;
pub mod dno;
pub mod dynamics;
mod error;
pub mod fft;
pub mod grid;
pub mod linstab;
pub mod paradiff;
pub mod quadrature;
pub mod surface;

pub use error::Error;
pub use grid::{GridSpec, RealField, SpectralField};
pub use num_complex::Complex64;

pub type Result<T, E = Error> = core::result::Result<T, E>;
