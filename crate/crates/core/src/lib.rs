//! Verification toolkit and one-dimensional solver for two-phase flow with a sharp,
//! mass-carrying interface.
//!
//! The library checks the differential and integral identities of the inviscid and viscous
//! models pointwise and by quadrature, and runs reduced planar and spherical simulations
//! whose mass and energy ledgers can be audited.

pub mod cli;
pub mod field;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod simulator;
pub mod surface;
pub mod tensors;
pub mod transport;
pub mod variational;

pub use field::{Mat3, Vec3};
