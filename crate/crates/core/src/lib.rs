//! Stochastic entanglement-configuration search for dressed variational
//! quantum classifiers.
//!
//! The crate samples binary CNOT matrices under density and per-qubit
//! constraints, trains a hybrid classifier for each one, and compares the
//! results against a purely classical baseline.

pub mod cli;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod features;
pub mod nnet;
pub mod statevector;
pub mod vqc;

pub use error::{Error, Result};
