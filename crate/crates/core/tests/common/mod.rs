#![allow(dead_code)]

use fundchain_core::contract::DEFAULT_GAS_PRICE_WEI;
use fundchain_core::{
    sign_tx, Address, Amount, Difficulty, ExecutionOutcome, GenesisConfig, KeyPair, Ledger,
    SignedTransaction, TxPayload, UnsignedTx, Wei,
};

pub const RICH: u128 = 1_000_000_000_000_000_000_000;

pub fn keys(n: usize) -> Vec<KeyPair> {
    (0..n)
        .map(|i| KeyPair::from_seed(&format!("party-{i}")))
        .collect()
}

pub fn genesis_for(keys: &[KeyPair], bits: u8) -> GenesisConfig {
    keys.iter().fold(
        GenesisConfig::new(Difficulty::new(bits).unwrap()),
        |g, k| g.with_allocation(k.address(), Amount::new(RICH)),
    )
}

pub fn signed(kp: &KeyPair, nonce: u64, payload: TxPayload) -> SignedTransaction {
    let gas_limit = fundchain_core::GasSchedule::default().default_limit(payload.kind());
    sign_tx(
        kp,
        UnsignedTx {
            nonce,
            gas_limit,
            gas_price: Amount::new(DEFAULT_GAS_PRICE_WEI),
            payload,
        },
    )
}

/// Drives a ledger one mined block at a time.
pub struct Harness {
    pub ledger: Ledger,
    pub proposer: Address,
    pub clock: u64,
}

impl Harness {
    pub fn new(genesis: GenesisConfig) -> Self {
        Self {
            ledger: Ledger::new(genesis),
            proposer: Address([0xee; 20]),
            clock: 1_700_000_000,
        }
    }

    pub fn tx(&self, kp: &KeyPair, payload: TxPayload) -> SignedTransaction {
        signed(kp, self.ledger.state().nonce(&kp.address()), payload)
    }

    /// Mines `txs` into one block; every tx must be includable.
    pub fn mine(&mut self, txs: Vec<SignedTransaction>) -> Vec<ExecutionOutcome> {
        let n = txs.len();
        self.clock += 10;
        let tpl = self
            .ledger
            .template(txs, self.proposer, self.clock, usize::MAX);
        assert!(tpl.deferred.is_empty(), "deferred: {:?}", tpl.deferred);
        assert_eq!(tpl.block.transactions.len(), n);
        let block = fundchain_core::mine(&tpl.block, self.ledger.genesis().difficulty, 0).unwrap();
        self.ledger.append(block).unwrap().to_vec()
    }

    pub fn exec(&mut self, kp: &KeyPair, payload: TxPayload) -> ExecutionOutcome {
        let tx = self.tx(kp, payload);
        self.mine(vec![tx]).remove(0)
    }

    pub fn deploy(&mut self, kp: &KeyPair) -> Address {
        let out = self.exec(
            kp,
            TxPayload::Deploy {
                min_fund_usd: Amount::usd(50),
            },
        );
        assert!(out.status.is_success());
        out.events[0].contract.unwrap()
    }

    pub fn balance(&self, a: &Address) -> Amount<Wei> {
        self.ledger.state().balance(a)
    }
}

/// Random mix of every transaction kind, mined a few at a time. Key 0 must
/// be the treasury. Calls `after_block` after each appended block.
pub fn random_workload(
    h: &mut Harness,
    ks: &[KeyPair],
    total: usize,
    seed: u64,
    mut after_block: impl FnMut(&Ledger),
) {
    use fundchain_core::contract::contract_address;
    use fundchain_core::fx::{min_wei_for_usd, RateTable};
    use fundchain_core::hash256;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let min_wei = min_wei_for_usd(Amount::usd(50), &RateTable::fixture())
        .unwrap()
        .value();
    let mut contracts: Vec<Address> = h.ledger.state().contracts.keys().copied().collect();
    let mut sent = 0;
    while sent < total {
        let batch = rng.gen_range(1..=6).min(total - sent);
        let mut pending: HashMap<Address, u64> = HashMap::new();
        let mut txs = Vec::new();
        for _ in 0..batch {
            let who = rng.gen_range(0..ks.len());
            let kp = &ks[who];
            let addr = kp.address();
            let nonce = h.ledger.state().nonce(&addr) + pending.get(&addr).copied().unwrap_or(0);
            let target = if contracts.is_empty() {
                Address([0xab; 20])
            } else {
                contracts[rng.gen_range(0..contracts.len())]
            };
            let other = ks[rng.gen_range(0..ks.len())].address();
            let payload = match rng.gen_range(0..100) {
                0..=9 => {
                    contracts.push(contract_address(&addr, nonce));
                    TxPayload::Deploy {
                        min_fund_usd: Amount::usd(rng.gen_range(0..=60)),
                    }
                }
                10..=44 => TxPayload::Fund {
                    contract: target,
                    amount: Amount::new(min_wei + rng.gen_range(0..min_wei) - min_wei / 8),
                    declared_fiat: None,
                },
                45..=59 => TxPayload::Withdraw { contract: target },
                60..=72 => TxPayload::Grant {
                    contract: target,
                    grantee: other,
                },
                73..=82 => TxPayload::Revoke {
                    contract: target,
                    target: other,
                },
                83..=92 => TxPayload::AttachReceipt {
                    contract: target,
                    content_hash: hash256(&rng.gen::<[u8; 8]>()),
                    memo: "r".into(),
                },
                _ if who == 0 => TxPayload::Mint {
                    to: other,
                    amount: Amount::new(rng.gen_range(1..min_wei)),
                },
                _ => TxPayload::Withdraw { contract: target },
            };
            let mut tx = signed(kp, nonce, payload);
            if rng.gen_ratio(1, 20) {
                tx = sign_tx(
                    kp,
                    UnsignedTx {
                        nonce,
                        gas_limit: tx.gas_limit / 2,
                        gas_price: tx.gas_price,
                        payload: tx.payload,
                    },
                );
            }
            *pending.entry(addr).or_default() += 1;
            txs.push(tx);
        }
        sent += txs.len();
        h.mine(txs);
        after_block(&h.ledger);
    }
}
