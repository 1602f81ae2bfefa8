//! Fisher information of strong-field ionization amplitudes.
//!
//! Amplitudes are evaluated in the saddle-point strong-field approximation
//! for few-cycle and monochromatic 800 nm fields; the quantum and classical
//! Fisher information about the ponderomotive energy `Up` follow from them.
//! Everything is in atomic units unless a name says otherwise.

pub mod amplitude;
pub mod audit;
pub mod config;
pub mod error;
pub mod field;
pub mod fisher;
pub mod incoherent;
pub mod measure;
pub mod pipeline;
pub mod quadrature;
pub mod reference;
pub mod saddle;
pub mod tables;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
