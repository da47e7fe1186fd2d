//! Differential geometry of surfaces immersed in three-dimensional normed
//! (Minkowski) spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`norm`] – admissible norms, their unit spheres and support maps.
//! * [`surface`] – parametrized immersions and the pointwise curvature engine
//!   (Birkhoff–Gauss map, Minkowski curvatures, affine fundamental form,
//!   Dupin metrics).
//! * [`variation`] – area functional, Birkhoff normal variations and the
//!   calculus of the weighted Dupin metric.
//! * [`geodesy`] – the induced length metric: distances, geodesics,
//!   diameter, perimeter and the curvature/diameter bounds.
//! * [`width`] – bodies of constant Minkowski width.
//! * [`acceptance`] – the end-to-end verification suite.

pub mod acceptance;
pub mod error;
pub mod expr;
pub mod geodesy;
pub mod linalg;
pub mod norm;
pub mod sampling;
pub mod surface;
pub mod variation;
pub mod width;

pub use error::{Error, Result};
pub use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

/// Crate version, echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
