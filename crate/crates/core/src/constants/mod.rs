//! Limiting constants: lattice Green's functions, `alpha_d` for `d >= 5`,
//! the logarithmic slope in `d = 4`, and the torus integral in `d = 3`.

mod bessel;
mod fourier;
mod heat;
mod lattice;

pub use bessel::scaled_bessel_i;
pub use fourier::fourier_green_3d;
pub use heat::{
    alpha_three, alpha_three_at, alpha_three_increment, alpha_three_parseval, centered_green, theta, torus_heat_kernel,
    AlphaThreeSettings, HeatConvention,
};
pub use lattice::{
    alpha_four, alpha_high_d, alpha_high_d_with, green_asymptotic_coefficient, lattice_green, AlphaEstimate, AlphaFourReport,
    BesselGrid, GreenSettings, GreenValue, LatticeGreenTable, WalkConvention,
};
