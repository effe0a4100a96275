use serde::{Deserialize, Serialize};

use fundchain_core::Digest;

use crate::config::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeReport {
    pub id: usize,
    pub head_hash: Digest,
    pub height: u64,
    #[serde(with = "fundchain_core::amount::u128_string")]
    pub cumulative_work: u128,
    pub blocks_mined: u64,
    pub hash_share_ppm: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub nodes: Vec<NodeReport>,
    /// All nodes ended on the same head.
    pub converged: bool,
    pub messages_sent: u64,
    /// Messages lost to a partition.
    pub messages_dropped: u64,
    pub blocks_rejected: u64,
    /// Only set for the double-spend scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_succeeded: Option<bool>,
    /// Every node's head state conserves supply.
    pub conserved: bool,
    pub events: u64,
    pub end_time_ms: u64,
    /// SHA-256 over the transcript, one line per applied event.
    pub transcript_digest: Digest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<String>>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
