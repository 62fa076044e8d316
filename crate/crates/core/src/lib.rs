//! Quantization of probability measures by power attraction-repulsion energies.
//!
//! A target density `ω` is approximated by `N` equal-weight points that minimize
//!
//! ```text
//! E[μ] = ∫∫ |x - y|^qa dμ(x) dω(y) - ½ ∫∫ |x - y|^qr dμ(x) dμ(y)
//! ```
//!
//! optionally regularized by a discrete total variation. The crate also exposes the
//! Fourier representation of the symmetrized energy, deterministic equal-mass
//! tilings, and a convex grid solver for the regularized problem on a 1D grid.

pub mod datasets;
pub mod energy;
mod error;
pub mod kernels;
pub mod measure;
pub mod solver;
pub mod tiling;
pub mod tv;

pub use error::{Error, Result};
pub use measure::{GridDensity, GridGeometry, Measure, MeasureRef, ParticleMeasure};
