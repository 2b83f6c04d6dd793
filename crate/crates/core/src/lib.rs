//! Discrete-state dynamic asset pricing models solved classically and with a
//! simulated gate-based HHL linear solver, evaluated through quantum
//! measurement operators.
//!
//! The pipeline: discretize a driving AR(1) process into a Markov chain
//! ([`markov`]), assemble and solve the price-dividend fixed point for a model
//! family ([`models`]), estimate the driving process from data ([`estimation`]),
//! optionally solve the system on a dense statevector HHL simulator
//! ([`qsolver`]), and compare model solutions against data with projection,
//! tail, and ambiguity measurement operators ([`measurement`]).

pub mod cli;
pub mod config;
pub mod error;
pub mod estimation;
pub mod markov;
pub mod measurement;
pub mod models;
pub mod qsolver;

pub use error::Error;

/// Version stamp written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
