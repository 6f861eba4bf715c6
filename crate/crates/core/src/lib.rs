pub mod cli;
pub mod error;
pub mod field;
pub mod format;
pub mod linalg;
pub mod msr;
pub mod params;
pub mod product_matrix;
pub mod reconstruct;
pub mod repair;
pub mod sim;
pub mod systematic;

pub use error::{Error, Result};
