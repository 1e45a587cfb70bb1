pub mod array;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod io;
pub mod operators;
pub mod solvers;
pub mod varreg;

pub use error::{Error, Result};
