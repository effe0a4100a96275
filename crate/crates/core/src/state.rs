//! World state: accounts and fund contracts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::amount::{Amount, MicroUsd, Wei};
use crate::codec::{Encode, Writer};
use crate::crypto::{hash256, Address, Digest};
use crate::tx::TxId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountState {
    pub balance: Amount<Wei>,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptRecord {
    pub content_hash: Digest,
    pub memo: String,
    pub attacher: Address,
    pub tx_id: TxId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub address: Address,
    /// Holds withdrawal and grant rights implicitly; never in `authorized`.
    pub deployer_owner: Address,
    pub authorized: BTreeSet<Address>,
    pub balance: Amount<Wei>,
    pub funded_by: BTreeMap<Address, Amount<Wei>>,
    /// Keys of `funded_by` in first-funding order.
    pub funders: Vec<Address>,
    pub receipts: Vec<ReceiptRecord>,
    pub min_fund_usd: Amount<MicroUsd>,
}

impl ContractState {
    pub fn new(address: Address, owner: Address, min_fund_usd: Amount<MicroUsd>) -> Self {
        Self {
            address,
            deployer_owner: owner,
            authorized: BTreeSet::new(),
            balance: Amount::ZERO,
            funded_by: BTreeMap::new(),
            funders: Vec::new(),
            receipts: Vec::new(),
            min_fund_usd,
        }
    }

    pub fn can_withdraw(&self, caller: &Address) -> bool {
        *caller == self.deployer_owner || self.authorized.contains(caller)
    }

    pub fn funded_amount(&self, funder: &Address) -> Amount<Wei> {
        self.funded_by.get(funder).copied().unwrap_or_default()
    }
}

impl Encode for ContractState {
    fn encode(&self, w: &mut Writer) {
        self.address.encode(w);
        self.deployer_owner.encode(w);
        w.put_len(self.authorized.len());
        for a in &self.authorized {
            a.encode(w);
        }
        self.balance.encode(w);
        w.put_len(self.funders.len());
        for f in &self.funders {
            f.encode(w);
            self.funded_amount(f).encode(w);
        }
        w.put_len(self.receipts.len());
        for r in &self.receipts {
            r.content_hash.encode(w);
            w.put_str(&r.memo);
            r.attacher.encode(w);
            r.tx_id.0.encode(w);
        }
        self.min_fund_usd.encode(w);
    }
}

/// Accounts and contracts, both keyed and iterated in address order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub accounts: BTreeMap<Address, AccountState>,
    pub contracts: BTreeMap<Address, ContractState>,
    /// Genesis allocations plus everything minted since.
    pub supply: Amount<Wei>,
}

impl WorldState {
    pub fn account(&self, addr: &Address) -> Option<&AccountState> {
        self.accounts.get(addr)
    }

    pub fn balance(&self, addr: &Address) -> Amount<Wei> {
        self.accounts
            .get(addr)
            .map(|a| a.balance)
            .unwrap_or_default()
    }

    pub fn nonce(&self, addr: &Address) -> u64 {
        self.accounts.get(addr).map(|a| a.nonce).unwrap_or_default()
    }

    pub fn contract(&self, addr: &Address) -> Option<&ContractState> {
        self.contracts.get(addr)
    }

    /// Σ account balances + Σ contract balances.
    pub fn total_balances(&self) -> Option<u128> {
        self.accounts
            .values()
            .map(|a| a.balance.value())
            .chain(self.contracts.values().map(|c| c.balance.value()))
            .try_fold(0u128, |acc, v| acc.checked_add(v))
    }

    /// Whether balances add up to the issued supply.
    pub fn is_conserved(&self) -> bool {
        self.total_balances() == Some(self.supply.value())
    }

    pub fn digest(&self) -> Digest {
        state_digest(self)
    }
}

impl Encode for WorldState {
    fn encode(&self, w: &mut Writer) {
        w.put_len(self.accounts.len());
        for (addr, acct) in &self.accounts {
            addr.encode(w);
            acct.balance.encode(w);
            w.put_u64(acct.nonce);
        }
        w.put_len(self.contracts.len());
        for contract in self.contracts.values() {
            contract.encode(w);
        }
    }
}

/// Hash of accounts sorted by address, then contracts sorted by address.
pub fn state_digest(state: &WorldState) -> Digest {
    hash256(&state.to_canonical_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_state_digest_matches_reference() {
        // Two zero u32 counts; digest of 8 zero bytes from Python hashlib.
        assert_eq!(
            WorldState::default().digest().to_hex(),
            "0xaf5570f5a1810b7af78caf4bc70a660f0df51e42baf91d4de5b2328de0e83dfc"
        );
    }

    fn acct(balance: u128, nonce: u64) -> AccountState {
        AccountState {
            balance: Amount::new(balance),
            nonce,
        }
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let (a, b) = (Address([1; 20]), Address([2; 20]));
        let mut s1 = WorldState::default();
        s1.accounts.insert(a, acct(5, 0));
        s1.accounts.insert(b, acct(7, 1));
        let mut s2 = WorldState::default();
        s2.accounts.insert(b, acct(7, 1));
        s2.accounts.insert(a, acct(5, 0));
        assert_eq!(s1.digest(), s2.digest());

        s2.accounts.insert(a, acct(6, 0));
        assert_ne!(s1.digest(), s2.digest());
    }

    #[test]
    fn contract_fields_affect_digest() {
        let mut s = WorldState::default();
        let c = ContractState::new(Address([9; 20]), Address([1; 20]), Amount::usd(50));
        s.contracts.insert(c.address, c);
        let before = s.digest();
        s.contracts
            .get_mut(&Address([9; 20]))
            .unwrap()
            .authorized
            .insert(Address([3; 20]));
        assert_ne!(before, s.digest());
    }
}
