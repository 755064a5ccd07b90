//! Command-line front end for the `beampred` simulator: dataset generation
//! and the experiment sweeps.

pub mod config;
pub mod experiments;

pub use config::RunConfig;
