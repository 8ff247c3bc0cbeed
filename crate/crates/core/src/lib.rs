//! Quantum Johnson-Lindenstrauss transforms built from approximate unitary
//! designs, the concentration bounds behind them, and a simulator for a
//! quantum private-information-retrieval protocol that uses them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod sampling;
pub mod circuits;
pub mod designs;
pub mod jl;
pub mod bounds;
pub mod concentration;
pub mod pir;
pub mod config;
pub mod experiments;
pub mod cli;

pub use error::{QjlError, Result};
