pub mod asymptotics;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod exponents;
pub mod fd;
pub mod green;
pub mod heat_kernel;
pub mod jacobi;
pub mod parallel;
pub mod pde;
pub mod report;
pub mod special;
pub mod suites;

pub use error::{Error, Result};
