//! Scattering by an object buried beneath a thin rough periodic layer over a
//! micro-structured half-space.
//!
//! The pipeline replaces the microstructure by an effective anisotropic medium
//! ([`homogenization`]), the thin layer by generalized transmission conditions
//! ([`boundary_layer`]), computes the layered background field and Green's
//! function ([`layered`]) and solves a boundary integral transmission problem
//! for the inclusion ([`bem`]). A finite-difference solver of the full
//! multiscale problem ([`reference`]) serves as the validation oracle.

pub mod bem;
pub mod boundary_layer;
pub mod error;
pub mod field;
pub mod homogenization;
pub mod kernels;
pub mod layered;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod reference;
pub mod scenarios;
pub mod sparse;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
