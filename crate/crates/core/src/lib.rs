//! Catalytic tree evaluation over matching-vector families.
//!
//! The pieces, bottom up: modular arithmetic over a squarefree modulus
//! ([`modmath`]), the matching-vector family ([`mv_family`]), a restorable
//! three-register machine with a free-space ledger ([`catalytic`]), the
//! one-level update ([`one_level`]), the recursive evaluator
//! ([`tree_eval`]), and the retrieval view of the same algorithm ([`cir`]).

pub mod catalytic;
pub mod cir;
pub mod cli;
pub mod error;
pub mod modmath;
pub mod mv_family;
pub mod one_level;
pub mod stats;
pub mod tree_eval;

pub use error::{Error, Result};
