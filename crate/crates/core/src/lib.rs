//! Relativistic Boltzmann equation for hard-sphere-like particles on the
//! 3-torus and its Newtonian limit: kinematics, collision kernels, discrete
//! collision operators, a monotone Kaniel–Shinbrot solver and the numerical
//! experiments built on them.

pub mod collision;
pub mod csv;
pub mod distributions;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod kinematics;
pub mod solver;

pub use error::{Error, Result};
