pub mod cli;
pub mod error;
pub mod femref;
pub mod network;
pub mod problems;
pub mod quadrature;
pub mod snapshot;
pub mod solver;
pub mod trial;

pub use error::{Error, Result};
