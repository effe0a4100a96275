//! Signing, submitting and following transactions.

use std::time::{Duration, Instant};

use fundchain_core::contract::DEFAULT_GAS_PRICE_WEI;
use fundchain_core::{
    sign_tx, Address, Amount, GasSchedule, KeyPair, SignedTransaction, TxId, TxPayload, UnsignedTx,
};
use fundchain_node::api::{AccountInfo, SubmitResponse, TxState, TxStatus};
use fundchain_node::MinedBlock;

use crate::client::{ApiClient, CliError};

/// What to do after a transaction is accepted into the mempool.
#[derive(Debug, Clone, Copy)]
pub struct Inclusion {
    /// Ask the node to produce a block right away.
    pub mine: bool,
    /// How long to wait for the transaction to be mined; `None` returns
    /// as soon as it is accepted.
    pub wait: Option<Duration>,
}

impl Default for Inclusion {
    fn default() -> Self {
        Self {
            mine: false,
            wait: Some(Duration::from_secs(60)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Executed {
    pub tx: SignedTransaction,
    pub tx_id: TxId,
    /// Set once the transaction is in a block.
    pub status: Option<TxStatus>,
}

impl Executed {
    /// Fails with the chain's reason if the transaction executed unsuccessfully.
    pub fn ensure_success(&self) -> Result<(), CliError> {
        match self.status.as_ref().and_then(|s| s.outcome.as_ref()) {
            Some(o) if !o.status.is_success() => Err(CliError::rejected(
                o.status.as_str(),
                format!("transaction {} failed", self.tx_id),
            )),
            _ => Ok(()),
        }
    }
}

/// Next nonce for `addr`, counting its pending transactions. Unknown
/// accounts start at 0.
pub fn next_nonce(api: &ApiClient, addr: &Address) -> Result<u64, CliError> {
    match api.get::<AccountInfo>(&format!("/accounts/{addr}")) {
        Ok(a) => Ok(a.next_nonce),
        Err(e) if e.is_not_found() => Ok(0),
        Err(e) => Err(e),
    }
}

pub fn sign(kp: &KeyPair, nonce: u64, payload: TxPayload) -> SignedTransaction {
    sign_tx(
        kp,
        UnsignedTx {
            nonce,
            gas_limit: GasSchedule::default().default_limit(payload.kind()),
            gas_price: Amount::new(DEFAULT_GAS_PRICE_WEI),
            payload,
        },
    )
}

pub fn submit(api: &ApiClient, tx: &SignedTransaction) -> Result<TxId, CliError> {
    api.post::<_, SubmitResponse>("/tx", tx).map(|r| r.tx_id)
}

pub fn mine(api: &ApiClient) -> Result<MinedBlock, CliError> {
    api.post("/mine", &serde_json::Value::Null)
}

/// Signs with the next nonce, submits, and follows the transaction per
/// `inclusion`.
pub fn execute(
    api: &ApiClient,
    kp: &KeyPair,
    payload: TxPayload,
    inclusion: Inclusion,
) -> Result<Executed, CliError> {
    let tx = sign(kp, next_nonce(api, &kp.address())?, payload);
    let tx_id = submit(api, &tx)?;
    if inclusion.mine {
        let block = mine(api)?;
        if let Some(d) = block.deferred.iter().find(|d| d.tx_id == tx_id) {
            return Err(CliError::rejected(
                d.reason.to_string(),
                format!("transaction {tx_id} left out of block {}", block.height),
            ));
        }
    }
    let status = match inclusion.wait {
        Some(timeout) => Some(wait_for(api, &tx_id, timeout)?),
        None => None,
    };
    Ok(Executed { tx, tx_id, status })
}

pub fn wait_for(api: &ApiClient, id: &TxId, timeout: Duration) -> Result<TxStatus, CliError> {
    let start = Instant::now();
    loop {
        let s: TxStatus = api.get(&format!("/tx/{id}"))?;
        if s.state == TxState::Included {
            return Ok(s);
        }
        if start.elapsed() >= timeout {
            return Err(CliError::Other(format!(
                "transaction {id} still pending after {}s (is mining enabled? try --mine)",
                timeout.as_secs()
            )));
        }
        std::thread::sleep(Duration::from_millis(50));
    }
}
