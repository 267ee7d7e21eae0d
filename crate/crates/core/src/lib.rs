//! Bloch-Redfield simulation of a two-level adiabatic quantum search coupled
//! to an ohmic thermal bath or a structured (band-gap) bath, with complex
//! dissipation rates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod output;
pub mod problem;
pub mod quad;
pub mod rates;

pub use error::{Error, Result};
