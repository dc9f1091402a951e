//! Photon-emission spectra of a non-relativistic charged particle driven by
//! classical colored noise, free or harmonically bound.
//!
//! The crate evaluates the exact finite-time emission rate from residue sums
//! over the zeros of `H(z) = kappa + z^2 (m - beta z)`, its large-time,
//! free-particle and weak-coupling closed forms, a semiclassical Larmor
//! route with a Monte-Carlo estimator, and brute-force oracles (Bromwich
//! inversion, double time quadrature) that check the closed forms.

pub mod error;
pub mod experiments;
pub mod kernels;
pub mod noise;
pub mod numeric;
pub mod oracle;
pub mod params;
pub mod roots;
pub mod semiclassical;
pub mod spectra;

pub use error::{EmissionError, Result};
pub use noise::{NoiseCorrelator, TabulatedSpectrum};
pub use params::{PhysicalParams, ScaledParams, UnitScale};
pub use roots::RootSet;
pub use spectra::{FiniteTimeOptions, Formula, RateSeries};
