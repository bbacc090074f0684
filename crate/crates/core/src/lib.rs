pub mod dynamics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod slc;
pub mod uncertainty;

pub use error::{Error, Result};
