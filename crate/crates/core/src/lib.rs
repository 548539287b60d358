pub mod complexity;
pub mod entropy;
pub mod error;
pub mod kernels;
pub mod krr;
pub mod poly;
pub mod quadrature;
pub mod regime;
pub mod sim;

pub use error::{Error, Result};
