//! Client transactions injected into a simulation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fundchain_core::contract::{contract_address, DEFAULT_GAS_PRICE_WEI};
use fundchain_core::fx::{min_wei_for_usd, RateTable};
use fundchain_core::{
    sign_tx, Address, Amount, GasSchedule, KeyPair, SignedTransaction, TxPayload, UnsignedTx,
};

/// Deploys one contract, then mixes funding (50–150 USD), grants and
/// withdraw attempts from a few client wallets.
#[derive(Debug, Clone)]
pub struct Workload {
    clients: Vec<KeyPair>,
    nonces: Vec<u64>,
    contract: Option<Address>,
    rng: ChaCha8Rng,
    mean_gap_ms: u64,
    rates: RateTable,
}

impl Workload {
    /// Needs at least two clients; client 0 owns the contract.
    pub fn new(rng: ChaCha8Rng, clients: usize, mean_gap_ms: u64) -> Self {
        assert!(clients >= 2, "workload needs two clients");
        Self {
            clients: (0..clients)
                .map(|i| KeyPair::from_seed(&format!("sim-client-{i}")))
                .collect(),
            nonces: vec![0; clients],
            contract: None,
            rng,
            mean_gap_ms,
            rates: RateTable::fixture(),
        }
    }

    pub fn clients(&self) -> &[KeyPair] {
        &self.clients
    }

    /// The contract the workload funds, once its deploy has been issued.
    pub fn contract(&self) -> Option<Address> {
        self.contract
    }

    /// Exponential gap to the next client transaction, in microseconds.
    pub fn next_gap_us(&mut self) -> u64 {
        let u: f64 = self.rng.gen();
        let mean_us = self.mean_gap_ms as f64 * 1000.0;
        (-(1.0 - u).ln() * mean_us).ceil().max(1.0) as u64
    }

    pub fn pick_node(&mut self, node_count: usize) -> usize {
        self.rng.gen_range(0..node_count)
    }

    pub fn next_tx(&mut self) -> SignedTransaction {
        let (who, payload) = match self.contract {
            None => {
                let owner = self.clients[0].address();
                self.contract = Some(contract_address(&owner, self.nonces[0]));
                (
                    0,
                    TxPayload::Deploy {
                        min_fund_usd: Amount::usd(50),
                    },
                )
            }
            Some(contract) => {
                let who = self.rng.gen_range(0..self.clients.len());
                match self.rng.gen_range(0..100) {
                    0..=74 => {
                        let usd = Amount::usd(self.rng.gen_range(50..=150));
                        let amount = min_wei_for_usd(usd, &self.rates).expect("small amount");
                        (
                            who,
                            TxPayload::Fund {
                                contract,
                                amount,
                                declared_fiat: Some(usd.tagged()),
                            },
                        )
                    }
                    75..=89 => {
                        let grantee =
                            self.clients[self.rng.gen_range(1..self.clients.len())].address();
                        (0, TxPayload::Grant { contract, grantee })
                    }
                    _ => (who, TxPayload::Withdraw { contract }),
                }
            }
        };
        let nonce = self.nonces[who];
        self.nonces[who] += 1;
        let gas_limit = GasSchedule::default().default_limit(payload.kind());
        sign_tx(
            &self.clients[who],
            UnsignedTx {
                nonce,
                gas_limit,
                gas_price: Amount::new(DEFAULT_GAS_PRICE_WEI),
                payload,
            },
        )
    }
}
