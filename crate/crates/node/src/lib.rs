//! A fundchain node: mempool, block production, an append-only block log,
//! a content-addressed receipt store and an HTTP/JSON API with a
//! server-sent event stream.

pub mod api;
pub mod blobs;
pub mod config;
pub mod events;
pub mod local;
pub mod mempool;
pub mod rates;
pub mod service;
pub mod store;

pub use config::{MiningConfig, NodeConfig, DEV_KEY_SEED};
pub use events::StreamMessage;
pub use local::LocalNode;
pub use mempool::SubmitError;
pub use rates::Currency;
pub use service::{MinedBlock, Node, NodeError, NodeHandle, Snapshot};
