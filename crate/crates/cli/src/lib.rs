//! The `fundchain` command-line tool: key management, contract operations
//! against a node, simulations and the per-feature benchmark.

pub mod app;
pub mod bench;
pub mod client;
pub mod keys;
pub mod wallet;

pub use client::{ApiClient, CliError};
