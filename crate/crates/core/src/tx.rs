//! Transactions: payloads, signing and stateless verification.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, MicroUsd, TaggedAmount, Wei};
use crate::codec::{Decode, DecodeError, Encode, Reader, Writer};
use crate::crypto::{derive_address, hash256, Address, Digest, KeyPair, PublicKey, Signature};

/// Longest memo accepted on a receipt attachment, in bytes.
pub const MAX_MEMO_BYTES: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxPayload {
    Deploy {
        min_fund_usd: Amount<MicroUsd>,
    },
    Fund {
        contract: Address,
        amount: Amount<Wei>,
        /// The fiat amount the funder entered before conversion, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_fiat: Option<TaggedAmount>,
    },
    Withdraw {
        contract: Address,
    },
    Grant {
        contract: Address,
        grantee: Address,
    },
    Revoke {
        contract: Address,
        target: Address,
    },
    AttachReceipt {
        contract: Address,
        content_hash: Digest,
        memo: String,
    },
    Mint {
        to: Address,
        amount: Amount<Wei>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxKind {
    Deploy,
    Fund,
    Withdraw,
    Grant,
    Revoke,
    AttachReceipt,
    Mint,
}

impl TxPayload {
    pub fn kind(&self) -> TxKind {
        match self {
            TxPayload::Deploy { .. } => TxKind::Deploy,
            TxPayload::Fund { .. } => TxKind::Fund,
            TxPayload::Withdraw { .. } => TxKind::Withdraw,
            TxPayload::Grant { .. } => TxKind::Grant,
            TxPayload::Revoke { .. } => TxKind::Revoke,
            TxPayload::AttachReceipt { .. } => TxKind::AttachReceipt,
            TxPayload::Mint { .. } => TxKind::Mint,
        }
    }

    /// The contract this payload targets, if it targets an existing one.
    pub fn contract(&self) -> Option<Address> {
        match self {
            TxPayload::Fund { contract, .. }
            | TxPayload::Withdraw { contract }
            | TxPayload::Grant { contract, .. }
            | TxPayload::Revoke { contract, .. }
            | TxPayload::AttachReceipt { contract, .. } => Some(*contract),
            TxPayload::Deploy { .. } | TxPayload::Mint { .. } => None,
        }
    }

    /// Wei leaving the sender's account on success, besides the fee.
    pub fn transferred(&self) -> Amount<Wei> {
        match self {
            TxPayload::Fund { amount, .. } => *amount,
            _ => Amount::ZERO,
        }
    }
}

impl Encode for TxPayload {
    fn encode(&self, w: &mut Writer) {
        match self {
            TxPayload::Deploy { min_fund_usd } => {
                w.put_u8(0);
                min_fund_usd.encode(w);
            }
            TxPayload::Fund {
                contract,
                amount,
                declared_fiat,
            } => {
                w.put_u8(1);
                contract.encode(w);
                amount.encode(w);
                match declared_fiat {
                    None => w.put_u8(0),
                    Some(fiat) => {
                        w.put_u8(1);
                        fiat.encode(w);
                    }
                }
            }
            TxPayload::Withdraw { contract } => {
                w.put_u8(2);
                contract.encode(w);
            }
            TxPayload::Grant { contract, grantee } => {
                w.put_u8(3);
                contract.encode(w);
                grantee.encode(w);
            }
            TxPayload::Revoke { contract, target } => {
                w.put_u8(4);
                contract.encode(w);
                target.encode(w);
            }
            TxPayload::AttachReceipt {
                contract,
                content_hash,
                memo,
            } => {
                w.put_u8(5);
                contract.encode(w);
                content_hash.encode(w);
                w.put_str(memo);
            }
            TxPayload::Mint { to, amount } => {
                w.put_u8(6);
                to.encode(w);
                amount.encode(w);
            }
        }
    }
}

impl Decode for TxPayload {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            0 => TxPayload::Deploy {
                min_fund_usd: Amount::decode(r)?,
            },
            1 => {
                let contract = Address::decode(r)?;
                let amount = Amount::decode(r)?;
                let declared_fiat = match r.u8()? {
                    0 => None,
                    1 => Some(TaggedAmount::decode(r)?),
                    tag => {
                        return Err(DecodeError::InvalidTag {
                            what: "option",
                            tag,
                        })
                    }
                };
                TxPayload::Fund {
                    contract,
                    amount,
                    declared_fiat,
                }
            }
            2 => TxPayload::Withdraw {
                contract: Address::decode(r)?,
            },
            3 => TxPayload::Grant {
                contract: Address::decode(r)?,
                grantee: Address::decode(r)?,
            },
            4 => TxPayload::Revoke {
                contract: Address::decode(r)?,
                target: Address::decode(r)?,
            },
            5 => TxPayload::AttachReceipt {
                contract: Address::decode(r)?,
                content_hash: Digest::decode(r)?,
                memo: r.string("memo", MAX_MEMO_BYTES)?,
            },
            6 => TxPayload::Mint {
                to: Address::decode(r)?,
                amount: Amount::decode(r)?,
            },
            tag => {
                return Err(DecodeError::InvalidTag {
                    what: "payload",
                    tag,
                })
            }
        })
    }
}

/// Transaction fields chosen by the sender before signing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsignedTx {
    pub nonce: u64,
    pub gas_limit: u64,
    pub gas_price: Amount<Wei>,
    pub payload: TxPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTransaction {
    pub sender: Address,
    pub nonce: u64,
    pub gas_limit: u64,
    /// Wei per gas unit.
    pub gas_price: Amount<Wei>,
    pub payload: TxPayload,
    pub public_key: PublicKey,
    pub signature: Signature,
}

impl SignedTransaction {
    /// The bytes covered by the signature: every field except the signature.
    pub fn signing_preimage(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_unsigned(&mut w);
        w.into_bytes()
    }

    fn encode_unsigned(&self, w: &mut Writer) {
        self.sender.encode(w);
        w.put_u64(self.nonce);
        w.put_u64(self.gas_limit);
        self.gas_price.encode(w);
        self.payload.encode(w);
        self.public_key.encode(w);
    }

    pub fn id(&self) -> TxId {
        TxId(hash256(&self.to_canonical_bytes()))
    }

    /// Upper bound on what the sender can lose: full gas budget plus transfer.
    pub fn max_cost(&self) -> Option<Amount<Wei>> {
        let gas = self.gas_price.checked_mul(self.gas_limit as u128).ok()?;
        gas.checked_add(self.payload.transferred()).ok()
    }
}

impl Encode for SignedTransaction {
    fn encode(&self, w: &mut Writer) {
        self.encode_unsigned(w);
        self.signature.encode(w);
    }
}

impl Decode for SignedTransaction {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            sender: Address::decode(r)?,
            nonce: r.u64()?,
            gas_limit: r.u64()?,
            gas_price: Amount::decode(r)?,
            payload: TxPayload::decode(r)?,
            public_key: PublicKey::decode(r)?,
            signature: Signature::decode(r)?,
        })
    }
}

/// Transaction identifier: SHA-256 of the full canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub Digest);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", self.0)
    }
}

impl std::str::FromStr for TxId {
    type Err = crate::crypto::CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(TxId)
    }
}

pub fn sign_tx(keypair: &KeyPair, unsigned: UnsignedTx) -> SignedTransaction {
    let mut tx = SignedTransaction {
        sender: keypair.address(),
        nonce: unsigned.nonce,
        gas_limit: unsigned.gas_limit,
        gas_price: unsigned.gas_price,
        payload: unsigned.payload,
        public_key: keypair.public_key(),
        signature: Signature([0; 64]),
    };
    tx.signature = keypair.sign(&tx.signing_preimage());
    tx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxVerifyError {
    #[error("BAD_SIGNATURE")]
    BadSignature,
    #[error("SENDER_MISMATCH")]
    SenderMismatch,
    #[error("MEMO_TOO_LONG")]
    MemoTooLong,
}

/// Stateless checks: sender matches the key, signature covers the preimage.
pub fn verify_tx(tx: &SignedTransaction) -> Result<(), TxVerifyError> {
    match derive_address(&tx.public_key) {
        Ok(addr) if addr == tx.sender => {}
        Ok(_) => return Err(TxVerifyError::SenderMismatch),
        Err(_) => return Err(TxVerifyError::BadSignature),
    }
    if let TxPayload::AttachReceipt { memo, .. } = &tx.payload {
        if memo.len() > MAX_MEMO_BYTES {
            return Err(TxVerifyError::MemoTooLong);
        }
    }
    if !tx.public_key.verify(&tx.signing_preimage(), &tx.signature) {
        return Err(TxVerifyError::BadSignature);
    }
    Ok(())
}
