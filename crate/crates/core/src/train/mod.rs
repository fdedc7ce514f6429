pub mod adam;
pub mod config;

pub use adam::*;
pub use config::*;
