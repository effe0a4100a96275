//! Core of a small proof-of-work chain hosting fund contracts.
//!
//! Funders pay into a contract, its owner decides who may withdraw, and every
//! attempt (accepted or rejected) lands in a replayable audit trail. Fiat
//! amounts in BDT or USD are converted to wei with exact rational arithmetic.

pub mod amount;
pub mod block;
pub mod chain;
pub mod codec;
pub mod contract;
pub mod crypto;
pub mod exec;
pub mod fx;
pub mod pow;
pub mod state;
pub mod tx;

pub use amount::{Amount, CentiBdt, MicroUsd, TaggedAmount, Unit, Wei};
pub use block::{block_hash, validate_block_structure, Block, BlockError, BlockHeader};
pub use chain::{
    audit_trail, fork_choice, validate_chain, ChainError, ChainView, GenesisConfig, Ledger, Trail,
};
pub use codec::{Decode, Encode};
pub use contract::{ExecStatus, ExecutionOutcome, GasSchedule, TrailEvent, TrailKind};
pub use crypto::{derive_address, hash256, Address, Digest, KeyPair, PublicKey, Signature};
pub use exec::{apply_tx, TxRejection};
pub use fx::{RateSourceConfig, RateTable};
pub use pow::{meets_target, mine, Difficulty};
pub use state::{state_digest, WorldState};
pub use tx::{sign_tx, verify_tx, SignedTransaction, TxId, TxPayload, UnsignedTx};
