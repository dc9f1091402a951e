//! Brute-force verifiers that share no algebra with the residue formulas:
//! numerical inversion of the kernel Laplace transforms along a vertical
//! contour, and direct quadrature of the defining double time integral.

mod bromwich;
mod quadrature;

pub use bromwich::{bromwich_numeric, BromwichResult, KernelArgs, KernelId};
pub use quadrature::{
    rate_quadrature, rate_quadrature_scaled, QuadratureResult, MIN_GRID_N, QUADRATURE_TOLERANCE,
};
