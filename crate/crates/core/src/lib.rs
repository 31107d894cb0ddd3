//! Ensemble-NMR simulation of single-query retrieval of marked database items.
//!
//! An ancilla spin is coupled to an `n`-spin register. Every register
//! bitstring owns one line of the ancilla multiplet; after one application of
//! the query oracle the lines of marked items point down in the ancilla
//! spectrum. The crate simulates the whole experiment: preparation
//! ([`prep`]), the query ([`oracle`]), acquisition ([`acquire`]) and decoding
//! ([`readout`]), on top of the spin operator algebra in [`spinops`].

pub mod acquire;
pub mod config;
pub mod engine;
pub mod error;
pub mod export;
pub mod oracle;
pub mod pipeline;
pub mod prep;
pub mod readout;
pub mod sequence;
pub mod spinops;

pub use error::{Error, Result};
