//! Thermal states of classical spin models prepared from carved cluster
//! states, with parent Hamiltonians certifying the deformed resource.

pub mod clique;
pub mod mbqc;
pub mod error;
pub mod parent;
pub mod pauli;
pub mod pipeline;
pub mod spin_model;
pub mod state;

pub use error::{Error, Result};
