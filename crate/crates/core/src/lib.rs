//! Spray geometry in explicit chart coordinates.
//!
//! Given a spray on a manifold modeled on a finite-dimensional or graded
//! truncated coordinate space, this crate extracts the associated symmetric
//! bilinear map, builds the covariant derivative, connection map, linear
//! symmetric connection, tangent structure, and the vector bundle structure
//! of the second-order tangent bundle, and numerically verifies the
//! identities tying them together. A manifold catalog, a verification-suite
//! runner with machine-readable reports, and a geodesic integrator round out
//! the toolbox; the `spraygeo` binary exposes all of it on the command line.

pub mod atlas;
pub mod connection;
pub mod diff;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod jet;
pub mod linalg;
pub mod manifold;
pub mod report;
pub mod sample;
pub mod second_order;
pub mod space;
pub mod spray;
pub mod suite;

pub use error::{Error, Result};
