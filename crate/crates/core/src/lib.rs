//! Boundary and volume integral equation solvers for time-harmonic elastic
//! scattering: a penetrable obstacle with an embedded rigid body, the
//! variable-density medium problem, and the accompanying symbol and probe
//! diagnostics.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod material;
pub mod medium;
pub mod operators;
pub mod probes;
pub mod symbolcheck;
pub mod transmission;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Real point or direction in space.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex displacement vector.
pub type CVec3 = nalgebra::Vector3<C64>;
/// Complex 3x3 kernel block.
pub type CMat3 = nalgebra::Matrix3<C64>;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
