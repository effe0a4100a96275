//! Transaction envelope and block execution.
//!
//! A transaction either fails the common pre-checks, in which case it cannot
//! be included in a block at all ([`TxRejection`]), or it reaches execution:
//! the sender's nonce increments and a fee moves to the proposer whatever the
//! operation's [`ExecStatus`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, Wei};
use crate::block::Block;
use crate::chain::GenesisConfig;
use crate::contract::{self, Effect, ExecStatus, ExecutionOutcome, TrailEvent};
use crate::crypto::Address;
use crate::state::WorldState;
use crate::tx::{SignedTransaction, TxPayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxRejection {
    #[error("UNKNOWN_SENDER")]
    UnknownSender,
    #[error("BAD_NONCE")]
    BadNonce,
    #[error("INSUFFICIENT_BALANCE")]
    InsufficientBalance,
    #[error("UNAUTHORIZED_MINT")]
    UnauthorizedMint,
    #[error("OVERFLOW")]
    Overflow,
}

/// Where in the chain a transaction executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxContext {
    pub height: u64,
    pub index: u32,
    pub proposer: Address,
}

/// Checks the envelope without touching state.
pub fn precheck(
    state: &WorldState,
    genesis: &GenesisConfig,
    tx: &SignedTransaction,
) -> Result<(), TxRejection> {
    let acct = state
        .account(&tx.sender)
        .ok_or(TxRejection::UnknownSender)?;
    if tx.nonce != acct.nonce {
        return Err(TxRejection::BadNonce);
    }
    let max_cost = tx.max_cost().ok_or(TxRejection::Overflow)?;
    if acct.balance < max_cost {
        return Err(TxRejection::InsufficientBalance);
    }
    if let TxPayload::Mint { amount, .. } = &tx.payload {
        if genesis.treasury_address() != Some(tx.sender) {
            return Err(TxRejection::UnauthorizedMint);
        }
        state
            .supply
            .checked_add(*amount)
            .map_err(|_| TxRejection::Overflow)?;
    }
    Ok(())
}

/// Applies one transaction. Signatures are not re-checked here; blocks are
/// structurally validated before execution.
pub fn apply_tx(
    state: &mut WorldState,
    genesis: &GenesisConfig,
    tx: &SignedTransaction,
    ctx: TxContext,
) -> Result<ExecutionOutcome, TxRejection> {
    precheck(state, genesis, tx)?;
    let tx_id = tx.id();
    let scheduled = genesis.gas.for_kind(tx.payload.kind());

    let sender = state.accounts.get_mut(&tx.sender).expect("prechecked");
    sender.nonce += 1;

    let (status, gas_used, effect) = if tx.gas_limit < scheduled {
        (ExecStatus::OutOfGas, tx.gas_limit, Effect::default())
    } else {
        let result = match &tx.payload {
            TxPayload::Deploy { min_fund_usd } => {
                contract::deploy(state, tx.sender, tx.nonce, *min_fund_usd)
            }
            TxPayload::Fund {
                contract, amount, ..
            } => contract::fund(state, tx.sender, *contract, *amount, &genesis.rates),
            TxPayload::Withdraw { contract } => contract::withdraw(state, tx.sender, *contract),
            TxPayload::Grant { contract, grantee } => {
                contract::grant(state, tx.sender, *contract, *grantee)
            }
            TxPayload::Revoke { contract, target } => {
                contract::revoke(state, tx.sender, *contract, *target)
            }
            TxPayload::AttachReceipt {
                contract,
                content_hash,
                memo,
            } => contract::attach_receipt(state, tx.sender, *contract, *content_hash, memo, tx_id),
            TxPayload::Mint { to, amount } => contract::mint(state, *to, *amount),
        };
        match result {
            Ok(effect) => (ExecStatus::Success, scheduled, effect),
            Err(status) => (status, scheduled, Effect::default()),
        }
    };

    let fee = charge_fee(state, &tx.sender, &ctx.proposer, tx.gas_price, gas_used);

    // Failed attempts still name their target so the trail shows them.
    let contract = effect.contract.or_else(|| match &tx.payload {
        TxPayload::Deploy { .. } => Some(contract::contract_address(&tx.sender, tx.nonce)),
        p => p.contract(),
    });
    let counterparty = effect.counterparty.or(match &tx.payload {
        TxPayload::Grant { grantee, .. } => Some(*grantee),
        TxPayload::Revoke { target, .. } => Some(*target),
        TxPayload::Mint { to, .. } => Some(*to),
        _ => None,
    });
    let event = TrailEvent {
        kind: tx.payload.kind().into(),
        status,
        actor: tx.sender,
        contract,
        counterparty,
        amount: effect.amount,
        content_hash: effect.content_hash,
        tx_id,
        height: ctx.height,
        index: ctx.index,
        gas_used,
        fee,
    };
    Ok(ExecutionOutcome {
        tx_id,
        status,
        gas_used,
        fee,
        events: vec![event],
    })
}

fn charge_fee(
    state: &mut WorldState,
    payer: &Address,
    proposer: &Address,
    gas_price: Amount<Wei>,
    gas_used: u64,
) -> Amount<Wei> {
    // gas_used ≤ gas_limit and the envelope checked the full gas budget.
    let fee = gas_price
        .checked_mul(gas_used as u128)
        .expect("fee bounded by prechecked budget");
    let acct = state.accounts.get_mut(payer).expect("payer exists");
    acct.balance = acct.balance.checked_sub(fee).expect("fee prechecked");
    let recipient = state.accounts.entry(*proposer).or_default();
    recipient.balance = recipient
        .balance
        .checked_add(fee)
        .expect("bounded by supply");
    fee
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("transaction {index} rejected: {reason}")]
pub struct BlockExecError {
    pub index: usize,
    pub reason: TxRejection,
}

#[derive(Debug, Clone)]
pub struct BlockExecution {
    pub state: WorldState,
    pub outcomes: Vec<ExecutionOutcome>,
}

/// Executes every transaction of `block` on top of `parent_state`.
/// Any envelope rejection invalidates the whole block.
pub fn execute_block(
    parent_state: &WorldState,
    genesis: &GenesisConfig,
    block: &Block,
) -> Result<BlockExecution, BlockExecError> {
    let mut state = parent_state.clone();
    let mut outcomes = Vec::with_capacity(block.transactions.len());
    for (index, tx) in block.transactions.iter().enumerate() {
        let ctx = TxContext {
            height: block.header.height,
            index: index as u32,
            proposer: block.header.proposer,
        };
        let outcome = apply_tx(&mut state, genesis, tx, ctx)
            .map_err(|reason| BlockExecError { index, reason })?;
        outcomes.push(outcome);
    }
    Ok(BlockExecution { state, outcomes })
}
