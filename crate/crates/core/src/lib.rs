//! Numerical laboratory for Monge-Ampère volumes of direct images on model
//! Kähler fibrations over the projective line.
//!
//! The modules build on each other bottom-up:
//!
//! - [`numerics`]: quadrature, Hermitian spectra, log-determinants, stencils.
//! - [`geometry`]: model weights, the Kähler coefficient matrix, `ω_H`, `π_*`.
//! - [`bergman`]: fiber section spaces, Gram matrices, Bergman kernels.
//! - [`toeplitz`]: Toeplitz matrices and their spectral asymptotics.
//! - [`directimage`]: families of Gram matrices and their Chern curvature.
//! - [`mavol`]: Monge-Ampère volumes, their asymptotics and saturation.
//! - [`sympow`]: symmetric powers of split bundles on the projective line.

pub mod numerics;
pub mod geometry;
pub mod bergman;
pub mod toeplitz;
pub mod directimage;
pub mod mavol;
pub mod sympow;

pub use numerics::{C64, CMatrix};
