//! Multi-scale approximate solutions of the low-Mach compressible Navier–Stokes
//! system with vanishing vertical viscosity on the slab `T²×[0,a3]`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral_core`] holds the geometry, the acoustic eigenbasis and grid transforms;
//! * [`resonance`] enumerates exact resonant triads and evaluates the filtered nonlinearity;
//! * [`filtered_dynamics`] integrates the damped Burgers system and the mean flow;
//! * [`layer_profiles`] builds boundary layers, the eigen-corrector and lifting correctors;
//! * [`assembler`] composes the approximate solution and measures its residual;
//! * [`cli_io`] runs named scenarios and writes artifacts.

pub mod assembler;
pub mod cli_io;
pub mod error;
pub mod filtered_dynamics;
pub mod jet;
pub mod layer_profiles;
pub mod par;
pub mod resonance;
pub mod spectral_core;
pub mod sum;

pub use error::{Error, Result};
pub use jet::{Jet, Scalar};
