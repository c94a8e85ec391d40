pub mod cli;
pub mod dynamics;
pub mod error;
pub mod filtration;
pub mod metrics;
pub mod oracle;
pub mod persistence;
pub mod pipeline;
pub mod protein;
pub mod selftest;
pub use error::{Error, Result};
