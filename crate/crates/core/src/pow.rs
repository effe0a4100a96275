//! Proof-of-work: target checks and nonce search.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::Block;
use crate::crypto::Digest;

/// Required number of leading zero bits in a block hash, in `[0, 64]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Difficulty(u8);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PowError {
    #[error("difficulty {0} out of range [0, 64]")]
    OutOfRange(u8),
    #[error("nonce space exhausted")]
    NonceExhausted,
}

impl Difficulty {
    pub const MAX_BITS: u8 = 64;

    pub fn new(bits: u8) -> Result<Self, PowError> {
        if bits > Self::MAX_BITS {
            return Err(PowError::OutOfRange(bits));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Expected hashes per block, `2^bits`; also the block's work.
    pub fn work(self) -> u128 {
        1u128 << self.0
    }
}

impl TryFrom<u8> for Difficulty {
    type Error = PowError;

    fn try_from(bits: u8) -> Result<Self, Self::Error> {
        Self::new(bits)
    }
}

impl From<Difficulty> for u8 {
    fn from(d: Difficulty) -> u8 {
        d.0
    }
}

pub fn meets_target(digest: &Digest, difficulty: Difficulty) -> bool {
    digest.leading_zero_bits() >= difficulty.0 as u32
}

/// Result of a nonce search, with the number of hashes tried.
#[derive(Debug, Clone)]
pub struct Mined {
    pub block: Block,
    pub attempts: u64,
}

/// Searches `[start, end]` for the smallest nonce whose header hash meets
/// the target. Workers mining in parallel each get a disjoint range.
pub fn mine_range(
    template: &Block,
    difficulty: Difficulty,
    start: u64,
    end: u64,
) -> Result<Mined, PowError> {
    let mut block = template.clone();
    block.header.difficulty_bits = difficulty.bits();
    let mut nonce = start;
    let mut attempts = 0u64;
    loop {
        block.header.pow_nonce = nonce;
        attempts += 1;
        if meets_target(&block.hash(), difficulty) {
            return Ok(Mined { block, attempts });
        }
        if nonce >= end {
            return Err(PowError::NonceExhausted);
        }
        nonce += 1;
    }
}

/// Returns `template` with the smallest nonce `≥ nonce_start` meeting the target.
pub fn mine(template: &Block, difficulty: Difficulty, nonce_start: u64) -> Result<Block, PowError> {
    mine_range(template, difficulty, nonce_start, u64::MAX).map(|m| m.block)
}
