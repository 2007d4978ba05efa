//! Non-Abelian gauge potentials and monopoles built from the dark states of
//! laser-coupled double tripods.

pub mod beams;
pub mod cli;
pub mod config;
pub mod dark_states;
pub mod error;
pub mod gauge_fields;
pub mod linalg;
pub mod monopole;
pub mod quadrature;
pub mod sampling;
pub mod scenarios;
pub mod su3;
pub mod verify;

pub use error::{Error, Result};
