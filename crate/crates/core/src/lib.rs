//! A desk-scale second-quantized measurement laboratory.
//!
//! [`fock`] holds the operator algebra, [`wave`] the c-number mode functions,
//! and the remaining modules assemble them into interference, EPR/Bell,
//! density-matrix and decoherence experiments. [`oracle`] carries independent
//! brute-force references and [`runner`] the config-driven CSV emitter.

pub mod csvout;
pub mod decoherence;
pub mod density;
pub mod detectors;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod pointer;
pub mod quadrature;
pub mod runner;
pub mod wave;

pub use error::{Error, Result};
