//! Seeded discrete-event simulation of a small fundchain network.
//!
//! Nodes gossip transactions and blocks over links with uniform random
//! latency. Block discovery is sampled from exponential distributions
//! weighted by hash share, while the blocks themselves are mined and fully
//! validated, so every adopted chain is a real chain. The same config always
//! yields the same transcript.

pub mod attack;
pub mod config;
pub mod report;
pub mod sim;
pub mod workload;

pub use attack::{attack_trials, AttackSummary};
pub use config::{AdversaryParams, ConfigError, Latency, PartitionParams, Scenario, SimConfig};
pub use report::{NodeReport, SimReport};
pub use sim::{run, EventKind, EventRecord, Sim};
