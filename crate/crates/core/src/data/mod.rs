//! Dataset contracts, loaders, and the synthetic scene generator.

pub mod manifest;
pub mod synthetic;

pub use manifest::*;
pub use synthetic::*;
