//! Pending transactions, one per `(sender, nonce)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fundchain_core::{verify_tx, Address, SignedTransaction, TxId, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubmitError {
    #[error("BAD_SIGNATURE")]
    BadSignature,
    #[error("BAD_NONCE")]
    BadNonce,
    #[error("DUPLICATE")]
    Duplicate,
}

impl SubmitError {
    pub fn as_str(self) -> &'static str {
        match self {
            SubmitError::BadSignature => "BAD_SIGNATURE",
            SubmitError::BadNonce => "BAD_NONCE",
            SubmitError::Duplicate => "DUPLICATE",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    tx: SignedTransaction,
    arrival: u64,
}

#[derive(Debug, Default, Clone)]
pub struct Mempool {
    by_key: BTreeMap<(Address, u64), Entry>,
    ids: HashSet<TxId>,
    arrivals: u64,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    pub fn contains(&self, id: &TxId) -> bool {
        self.ids.contains(id)
    }

    /// Stateless checks plus nonce freshness against `state`. A second
    /// transaction for an occupied `(sender, nonce)` slot is a duplicate;
    /// there is no fee replacement.
    pub fn insert(
        &mut self,
        tx: SignedTransaction,
        state: &WorldState,
    ) -> Result<TxId, SubmitError> {
        // Sender mismatch and oversized memos are signature-envelope failures.
        verify_tx(&tx).map_err(|_| SubmitError::BadSignature)?;
        if tx.nonce < state.nonce(&tx.sender) {
            return Err(SubmitError::BadNonce);
        }
        let key = (tx.sender, tx.nonce);
        if self.by_key.contains_key(&key) {
            return Err(SubmitError::Duplicate);
        }
        let id = tx.id();
        self.ids.insert(id);
        self.arrivals += 1;
        self.by_key.insert(
            key,
            Entry {
                tx,
                arrival: self.arrivals,
            },
        );
        Ok(id)
    }

    /// Inclusion order: highest gas price first, ties broken by arrival,
    /// while each sender's transactions stay in nonce order.
    pub fn ordered(&self) -> Vec<SignedTransaction> {
        let mut queues: HashMap<Address, Vec<&Entry>> = HashMap::new();
        // BTreeMap iteration yields each sender's entries by ascending nonce.
        for ((sender, _), e) in &self.by_key {
            queues.entry(*sender).or_default().push(e);
        }
        let mut cursors: Vec<(&Vec<&Entry>, usize)> = queues.values().map(|q| (q, 0)).collect();
        let mut out = Vec::with_capacity(self.by_key.len());
        loop {
            let best = cursors
                .iter()
                .enumerate()
                .filter_map(|(i, (q, pos))| q.get(*pos).map(|e| (i, e)))
                .min_by_key(|(_, e)| (std::cmp::Reverse(e.tx.gas_price), e.arrival));
            let Some((i, e)) = best else { break };
            out.push(e.tx.clone());
            cursors[i].1 += 1;
        }
        out
    }

    /// Drops transactions whose nonce is already used in `state`.
    pub fn prune(&mut self, state: &WorldState) {
        let ids = &mut self.ids;
        self.by_key.retain(|(sender, nonce), e| {
            let keep = *nonce >= state.nonce(sender);
            if !keep {
                ids.remove(&e.tx.id());
            }
            keep
        });
    }
}
