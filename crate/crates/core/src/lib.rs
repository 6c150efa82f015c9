//! Finite-element solver for quasistatic thermo-visco-plasticity.
//!
//! The mechanical problem (Kelvin–Voigt viscoelasticity with a plastic
//! strain driven by a flow rule) and the heat equation with dissipative
//! heating are coupled through a temperature-to-temperature map that is
//! iterated to a fixed point over the whole time window.

pub mod config;
pub mod coupler;
pub mod data;
pub mod error;
pub mod expr;
pub mod fem;
pub mod harness;
pub mod heat;
pub mod linalg;
pub mod materials;
pub mod mech;
pub mod mesh;
pub mod mms;
pub mod oracle;
pub mod tensor;

pub use error::{Error, Result};
