pub mod canonical;
pub mod cli;
pub mod empirics;
pub mod error;
pub mod lattice;
pub mod percolation;
pub mod stieltjes;

pub use error::{Error, Result};
