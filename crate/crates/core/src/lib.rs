pub mod allocate;
pub mod cli;
pub mod domain;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};
