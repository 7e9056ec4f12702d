pub mod cli;
pub mod error;
pub mod exact;
pub mod diophantine;
pub mod group;
pub mod heavy;
pub mod target;
pub mod dimension;
pub use error::{Error, Result};
