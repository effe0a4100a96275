//! Messages pushed to event-stream subscribers.

use serde::{Deserialize, Serialize};

use fundchain_core::{Block, Digest, ExecutionOutcome, TrailEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StreamMessage {
    NewBlock {
        height: u64,
        hash: Digest,
        parent_hash: Digest,
        timestamp: u64,
        tx_count: usize,
        state_digest: Digest,
    },
    TrailEvent {
        event: TrailEvent,
    },
    /// Last message before the server drops a subscriber that fell behind.
    Overflow {
        missed_blocks: u64,
    },
}

impl StreamMessage {
    pub fn name(&self) -> &'static str {
        match self {
            StreamMessage::NewBlock { .. } => "NEW_BLOCK",
            StreamMessage::TrailEvent { .. } => "TRAIL_EVENT",
            StreamMessage::Overflow { .. } => "OVERFLOW",
        }
    }
}

/// Everything one committed block contributes to the stream, in order:
/// `NEW_BLOCK` followed by the block's trail events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMessages {
    pub height: u64,
    pub messages: Vec<StreamMessage>,
}

impl BlockMessages {
    pub fn new(block: &Block, outcomes: &[ExecutionOutcome]) -> Self {
        let h = &block.header;
        let mut messages = vec![StreamMessage::NewBlock {
            height: h.height,
            hash: block.hash(),
            parent_hash: h.parent_hash,
            timestamp: h.timestamp,
            tx_count: block.transactions.len(),
            state_digest: h.state_digest,
        }];
        messages.extend(
            outcomes
                .iter()
                .flat_map(|o| o.events.iter())
                .map(|e| StreamMessage::TrailEvent { event: e.clone() }),
        );
        Self {
            height: h.height,
            messages,
        }
    }
}
