//! The fund contract: gas schedule, execution statuses, trail events and the
//! per-operation state transitions.
//!
//! Transitions here assume the common pre-checks (nonce, balance, gas budget)
//! already passed; see [`crate::exec`] for the transaction envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, MicroUsd, Wei};
use crate::codec::{Encode, Writer};
use crate::crypto::{hash256, Address, Digest};
use crate::fx::{meets_minimum, RateTable};
use crate::state::{ContractState, ReceiptRecord, WorldState};
use crate::tx::{TxId, TxKind};

/// Gas used by a successful fund call, as observed on the reference deployment.
pub const FUND_GAS: u64 = 109_281;
/// Default gas limit a client attaches to a fund call.
pub const DEFAULT_FUND_GAS_LIMIT: u64 = 120_209;
/// 2.241460064 gwei.
pub const DEFAULT_GAS_PRICE_WEI: u128 = 2_241_460_064;
pub const DEFAULT_MIN_FUND_USD: Amount<MicroUsd> = Amount::usd(50);

/// Fixed gas cost per transaction kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasSchedule {
    pub deploy_gas: u64,
    pub fund_gas: u64,
    pub withdraw_gas: u64,
    pub grant_gas: u64,
    pub revoke_gas: u64,
    pub receipt_gas: u64,
    pub mint_gas: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        Self {
            deploy_gas: 850_000,
            fund_gas: FUND_GAS,
            withdraw_gas: 35_000,
            grant_gas: 45_000,
            revoke_gas: 25_000,
            receipt_gas: 30_000,
            mint_gas: 21_000,
        }
    }
}

impl GasSchedule {
    pub fn for_kind(&self, kind: TxKind) -> u64 {
        match kind {
            TxKind::Deploy => self.deploy_gas,
            TxKind::Fund => self.fund_gas,
            TxKind::Withdraw => self.withdraw_gas,
            TxKind::Grant => self.grant_gas,
            TxKind::Revoke => self.revoke_gas,
            TxKind::AttachReceipt => self.receipt_gas,
            TxKind::Mint => self.mint_gas,
        }
    }

    /// Gas limit a client should attach by default.
    pub fn default_limit(&self, kind: TxKind) -> u64 {
        match kind {
            TxKind::Fund => DEFAULT_FUND_GAS_LIMIT.max(self.fund_gas),
            other => self.for_kind(other),
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.deploy_gas,
            self.fund_gas,
            self.withdraw_gas,
            self.grant_gas,
            self.revoke_gas,
            self.receipt_gas,
            self.mint_gas,
        ]
        .iter()
        .all(|g| *g > 0)
    }
}

/// Result of a transaction that reached execution.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Error, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExecStatus {
    #[error("SUCCESS")]
    Success,
    #[error("OUT_OF_GAS")]
    OutOfGas,
    #[error("UNKNOWN_CONTRACT")]
    UnknownContract,
    #[error("BELOW_MINIMUM_FUND")]
    BelowMinimumFund,
    #[error("UNAUTHORIZED_WITHDRAWER")]
    UnauthorizedWithdrawer,
    #[error("NOT_OWNER")]
    NotOwner,
    #[error("GRANTEE_IS_OWNER")]
    GranteeIsOwner,
    #[error("CANNOT_REVOKE_DEPLOYER")]
    CannotRevokeDeployer,
    #[error("TARGET_NOT_AUTHORIZED")]
    TargetNotAuthorized,
    #[error("UNAUTHORIZED_ATTACHER")]
    UnauthorizedAttacher,
}

impl ExecStatus {
    pub fn is_success(self) -> bool {
        self == ExecStatus::Success
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExecStatus::Success => "SUCCESS",
            ExecStatus::OutOfGas => "OUT_OF_GAS",
            ExecStatus::UnknownContract => "UNKNOWN_CONTRACT",
            ExecStatus::BelowMinimumFund => "BELOW_MINIMUM_FUND",
            ExecStatus::UnauthorizedWithdrawer => "UNAUTHORIZED_WITHDRAWER",
            ExecStatus::NotOwner => "NOT_OWNER",
            ExecStatus::GranteeIsOwner => "GRANTEE_IS_OWNER",
            ExecStatus::CannotRevokeDeployer => "CANNOT_REVOKE_DEPLOYER",
            ExecStatus::TargetNotAuthorized => "TARGET_NOT_AUTHORIZED",
            ExecStatus::UnauthorizedAttacher => "UNAUTHORIZED_ATTACHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrailKind {
    Deployed,
    Funded,
    Withdrawn,
    Granted,
    Revoked,
    ReceiptAttached,
    Minted,
}

impl From<TxKind> for TrailKind {
    fn from(kind: TxKind) -> Self {
        match kind {
            TxKind::Deploy => TrailKind::Deployed,
            TxKind::Fund => TrailKind::Funded,
            TxKind::Withdraw => TrailKind::Withdrawn,
            TxKind::Grant => TrailKind::Granted,
            TxKind::Revoke => TrailKind::Revoked,
            TxKind::AttachReceipt => TrailKind::ReceiptAttached,
            TxKind::Mint => TrailKind::Minted,
        }
    }
}

/// One entry of the audit trail. Rejected attempts are recorded too, with
/// `status` naming the reason. Field names are a stable export schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailEvent {
    pub kind: TrailKind,
    pub status: ExecStatus,
    pub actor: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterparty: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<Amount<Wei>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_hash: Option<Digest>,
    pub tx_id: TxId,
    pub height: u64,
    /// Position of the transaction within its block.
    pub index: u32,
    pub gas_used: u64,
    pub fee: Amount<Wei>,
}

impl TrailEvent {
    /// Total order of the trail.
    pub fn position(&self) -> (u64, u32) {
        (self.height, self.index)
    }
}

/// The shared JSON serializer for trails: one compact object per line.
pub fn trail_to_json_lines(events: &[TrailEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trail event serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub tx_id: TxId,
    pub status: ExecStatus,
    pub gas_used: u64,
    /// `gas_used × gas_price`, paid to the block proposer.
    pub fee: Amount<Wei>,
    pub events: Vec<TrailEvent>,
}

/// Address of a contract deployed by `sender` with transaction nonce `nonce`.
pub fn contract_address(sender: &Address, nonce: u64) -> Address {
    let mut w = Writer::new();
    sender.encode(&mut w);
    w.put_u64(nonce);
    Address::from_digest(&hash256(&w.into_bytes()))
}

/// What a successful operation did, for the trail.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Effect {
    pub contract: Option<Address>,
    pub counterparty: Option<Address>,
    pub amount: Option<Amount<Wei>>,
    pub content_hash: Option<Digest>,
}

fn contract_mut<'a>(
    state: &'a mut WorldState,
    contract: &Address,
) -> Result<&'a mut ContractState, ExecStatus> {
    state
        .contracts
        .get_mut(contract)
        .ok_or(ExecStatus::UnknownContract)
}

pub(crate) fn deploy(
    state: &mut WorldState,
    sender: Address,
    nonce: u64,
    min_fund_usd: Amount<MicroUsd>,
) -> Result<Effect, ExecStatus> {
    let address = contract_address(&sender, nonce);
    state
        .contracts
        .insert(address, ContractState::new(address, sender, min_fund_usd));
    Ok(Effect {
        contract: Some(address),
        ..Effect::default()
    })
}

pub(crate) fn fund(
    state: &mut WorldState,
    sender: Address,
    contract: Address,
    amount: Amount<Wei>,
    rates: &RateTable,
) -> Result<Effect, ExecStatus> {
    let c = state
        .contracts
        .get(&contract)
        .ok_or(ExecStatus::UnknownContract)?;
    if !meets_minimum(amount, c.min_fund_usd, rates) {
        return Err(ExecStatus::BelowMinimumFund);
    }
    // The envelope checked balance ≥ gas budget + amount; the fee is at most
    // the gas budget, so these cannot fail.
    let acct = state.accounts.get_mut(&sender).expect("sender exists");
    acct.balance = acct
        .balance
        .checked_sub(amount)
        .expect("balance pre-checked");
    let c = contract_mut(state, &contract)?;
    c.balance = c.balance.checked_add(amount).expect("bounded by supply");
    let entry = c.funded_by.entry(sender).or_default();
    if entry.is_zero() && !amount.is_zero() {
        c.funders.push(sender);
    }
    *entry = entry.checked_add(amount).expect("bounded by supply");
    if entry.is_zero() {
        c.funded_by.remove(&sender);
    }
    Ok(Effect {
        contract: Some(contract),
        amount: Some(amount),
        ..Effect::default()
    })
}

/// Drains the whole balance to the caller and resets the funder ledger.
pub(crate) fn withdraw(
    state: &mut WorldState,
    caller: Address,
    contract: Address,
) -> Result<Effect, ExecStatus> {
    let c = contract_mut(state, &contract)?;
    if !c.can_withdraw(&caller) {
        return Err(ExecStatus::UnauthorizedWithdrawer);
    }
    let drained = std::mem::take(&mut c.balance);
    c.funded_by.clear();
    c.funders.clear();
    let acct = state.accounts.entry(caller).or_default();
    acct.balance = acct
        .balance
        .checked_add(drained)
        .expect("bounded by supply");
    Ok(Effect {
        contract: Some(contract),
        amount: Some(drained),
        ..Effect::default()
    })
}

pub(crate) fn grant(
    state: &mut WorldState,
    caller: Address,
    contract: Address,
    grantee: Address,
) -> Result<Effect, ExecStatus> {
    let c = contract_mut(state, &contract)?;
    if caller != c.deployer_owner {
        return Err(ExecStatus::NotOwner);
    }
    if grantee == c.deployer_owner {
        return Err(ExecStatus::GranteeIsOwner);
    }
    c.authorized.insert(grantee);
    Ok(Effect {
        contract: Some(contract),
        counterparty: Some(grantee),
        ..Effect::default()
    })
}

pub(crate) fn revoke(
    state: &mut WorldState,
    caller: Address,
    contract: Address,
    target: Address,
) -> Result<Effect, ExecStatus> {
    let c = contract_mut(state, &contract)?;
    if caller != c.deployer_owner {
        return Err(ExecStatus::NotOwner);
    }
    if target == c.deployer_owner {
        return Err(ExecStatus::CannotRevokeDeployer);
    }
    if !c.authorized.remove(&target) {
        return Err(ExecStatus::TargetNotAuthorized);
    }
    Ok(Effect {
        contract: Some(contract),
        counterparty: Some(target),
        ..Effect::default()
    })
}

pub(crate) fn attach_receipt(
    state: &mut WorldState,
    caller: Address,
    contract: Address,
    content_hash: Digest,
    memo: &str,
    tx_id: TxId,
) -> Result<Effect, ExecStatus> {
    let c = contract_mut(state, &contract)?;
    if !c.can_withdraw(&caller) {
        return Err(ExecStatus::UnauthorizedAttacher);
    }
    c.receipts.push(ReceiptRecord {
        content_hash,
        memo: memo.to_string(),
        attacher: caller,
        tx_id,
    });
    Ok(Effect {
        contract: Some(contract),
        content_hash: Some(content_hash),
        ..Effect::default()
    })
}

pub(crate) fn mint(
    state: &mut WorldState,
    to: Address,
    amount: Amount<Wei>,
) -> Result<Effect, ExecStatus> {
    let acct = state.accounts.entry(to).or_default();
    acct.balance = acct.balance.checked_add(amount).expect("mint pre-checked");
    state.supply = state.supply.checked_add(amount).expect("mint pre-checked");
    Ok(Effect {
        counterparty: Some(to),
        amount: Some(amount),
        ..Effect::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("UNKNOWN_CONTRACT")]
    UnknownContract,
}

pub fn owner_of(state: &WorldState, contract: &Address) -> Result<Address, QueryError> {
    state
        .contract(contract)
        .map(|c| c.deployer_owner)
        .ok_or(QueryError::UnknownContract)
}

pub fn contract_balance(state: &WorldState, contract: &Address) -> Result<Amount<Wei>, QueryError> {
    state
        .contract(contract)
        .map(|c| c.balance)
        .ok_or(QueryError::UnknownContract)
}

pub fn funded_amount(
    state: &WorldState,
    contract: &Address,
    funder: &Address,
) -> Result<Amount<Wei>, QueryError> {
    state
        .contract(contract)
        .map(|c| c.funded_amount(funder))
        .ok_or(QueryError::UnknownContract)
}
