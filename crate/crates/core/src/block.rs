//! Blocks, headers and structural validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Decode, DecodeError, Encode, Reader, Writer};
use crate::crypto::{hash256, Address, Digest};
use crate::tx::{verify_tx, SignedTransaction, TxId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub parent_hash: Digest,
    pub height: u64,
    pub difficulty_bits: u8,
    pub pow_nonce: u64,
    /// Unix seconds.
    pub timestamp: u64,
    pub tx_root: Digest,
    pub state_digest: Digest,
    pub proposer: Address,
}

impl BlockHeader {
    pub fn hash(&self) -> Digest {
        block_hash(self)
    }
}

pub fn block_hash(header: &BlockHeader) -> Digest {
    hash256(&header.to_canonical_bytes())
}

impl Encode for BlockHeader {
    fn encode(&self, w: &mut Writer) {
        self.parent_hash.encode(w);
        w.put_u64(self.height);
        w.put_u8(self.difficulty_bits);
        w.put_u64(self.pow_nonce);
        w.put_u64(self.timestamp);
        self.tx_root.encode(w);
        self.state_digest.encode(w);
        self.proposer.encode(w);
    }
}

impl Decode for BlockHeader {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            parent_hash: Digest::decode(r)?,
            height: r.u64()?,
            difficulty_bits: r.u8()?,
            pow_nonce: r.u64()?,
            timestamp: r.u64()?,
            tx_root: Digest::decode(r)?,
            state_digest: Digest::decode(r)?,
            proposer: Address::decode(r)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<SignedTransaction>,
}

impl Block {
    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn tx_ids(&self) -> Vec<TxId> {
        self.transactions
            .iter()
            .map(SignedTransaction::id)
            .collect()
    }
}

impl Encode for Block {
    fn encode(&self, w: &mut Writer) {
        self.header.encode(w);
        w.put_seq(&self.transactions);
    }
}

impl Decode for Block {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            header: BlockHeader::decode(r)?,
            transactions: r.seq("transactions")?,
        })
    }
}

/// Hash of the concatenated transaction ids, in block order.
pub fn tx_root(txs: &[SignedTransaction]) -> Digest {
    let mut buf = Vec::with_capacity(txs.len() * 32);
    for tx in txs {
        buf.extend_from_slice(tx.id().0.as_bytes());
    }
    hash256(&buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BlockError {
    #[error("BAD_PARENT")]
    BadParent,
    #[error("BAD_HEIGHT")]
    BadHeight,
    #[error("BAD_TX_ROOT")]
    BadTxRoot,
    #[error("BAD_TX_SIGNATURE")]
    BadTxSignature,
    #[error("BAD_TIMESTAMP")]
    BadTimestamp,
    #[error("BAD_DIFFICULTY")]
    BadDifficulty,
    #[error("POW_FAIL")]
    PowFail,
    #[error("BAD_STATE_DIGEST")]
    BadStateDigest,
    #[error("INVALID_TX")]
    InvalidTx,
    #[error("BAD_GENESIS")]
    BadGenesis,
    #[error("MALFORMED")]
    Malformed,
}

/// Linkage, height, tx root, signatures and timestamp. Proof-of-work and
/// state execution are checked by the consensus layer.
pub fn validate_block_structure(
    block: &Block,
    parent: Option<&BlockHeader>,
) -> Result<(), BlockError> {
    let header = &block.header;
    match parent {
        None => {
            if header.parent_hash != Digest::ZERO {
                return Err(BlockError::BadParent);
            }
            if header.height != 0 {
                return Err(BlockError::BadHeight);
            }
        }
        Some(parent) => {
            if header.parent_hash != parent.hash() {
                return Err(BlockError::BadParent);
            }
            if parent.height.checked_add(1) != Some(header.height) {
                return Err(BlockError::BadHeight);
            }
            if header.timestamp < parent.timestamp {
                return Err(BlockError::BadTimestamp);
            }
        }
    }
    if tx_root(&block.transactions) != header.tx_root {
        return Err(BlockError::BadTxRoot);
    }
    if block.transactions.iter().any(|tx| verify_tx(tx).is_err()) {
        return Err(BlockError::BadTxSignature);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Amount;
    use crate::crypto::KeyPair;
    use crate::tx::{sign_tx, TxPayload, UnsignedTx};

    fn zero_header() -> BlockHeader {
        BlockHeader {
            parent_hash: Digest::ZERO,
            height: 0,
            difficulty_bits: 0,
            pow_nonce: 0,
            timestamp: 0,
            tx_root: Digest::ZERO,
            state_digest: Digest::ZERO,
            proposer: Address::ZERO,
        }
    }

    #[test]
    fn zero_header_hash_matches_reference() {
        // 32+8+1+8+8+32+32+20 = 141 zero bytes; digest from Python hashlib.
        assert_eq!(zero_header().to_canonical_bytes(), vec![0u8; 141]);
        assert_eq!(
            block_hash(&zero_header()).to_hex(),
            "0xdc2021c180e2d8367d094b4c07d11bd556d64b33d1fe8bf58e208e8da8f5dd55"
        );
    }

    #[test]
    fn nonce_changes_hash() {
        let a = zero_header();
        let mut b = a.clone();
        b.pow_nonce += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), zero_header().hash());
    }

    fn child_of(parent: &BlockHeader, txs: Vec<SignedTransaction>) -> Block {
        Block {
            header: BlockHeader {
                parent_hash: parent.hash(),
                height: parent.height + 1,
                timestamp: parent.timestamp + 1,
                tx_root: tx_root(&txs),
                ..zero_header()
            },
            transactions: txs,
        }
    }

    fn some_tx() -> SignedTransaction {
        sign_tx(
            &KeyPair::from_seed("a"),
            UnsignedTx {
                nonce: 0,
                gas_limit: 850_000,
                gas_price: Amount::ZERO,
                payload: TxPayload::Deploy {
                    min_fund_usd: Amount::usd(50),
                },
            },
        )
    }

    #[test]
    fn genesis_accepts() {
        let genesis = Block {
            header: BlockHeader {
                tx_root: tx_root(&[]),
                ..zero_header()
            },
            transactions: vec![],
        };
        assert_eq!(validate_block_structure(&genesis, None), Ok(()));
    }

    #[test]
    fn structural_rejections() {
        let parent = zero_header();
        let good = child_of(&parent, vec![some_tx()]);
        assert_eq!(validate_block_structure(&good, Some(&parent)), Ok(()));

        let mut b = good.clone();
        b.header.tx_root = Digest::ZERO;
        assert_eq!(
            validate_block_structure(&b, Some(&parent)),
            Err(BlockError::BadTxRoot)
        );

        let mut b = good.clone();
        b.header.parent_hash = Digest([1; 32]);
        assert_eq!(
            validate_block_structure(&b, Some(&parent)),
            Err(BlockError::BadParent)
        );

        let mut b = good.clone();
        b.header.height = 5;
        assert_eq!(
            validate_block_structure(&b, Some(&parent)),
            Err(BlockError::BadHeight)
        );

        let mut later_parent = parent.clone();
        later_parent.timestamp = 100;
        let b = child_of(&later_parent, vec![]);
        let mut b2 = b.clone();
        b2.header.timestamp = 99;
        assert_eq!(
            validate_block_structure(&b2, Some(&later_parent)),
            Err(BlockError::BadTimestamp)
        );

        let mut tx = some_tx();
        tx.nonce = 1;
        let b = child_of(&parent, vec![tx]);
        assert_eq!(
            validate_block_structure(&b, Some(&parent)),
            Err(BlockError::BadTxSignature)
        );
    }
}
