//! Exhaustive check of withdrawal rights against plain set semantics.

mod common;

use std::collections::BTreeSet;

use common::{genesis_for, keys, signed, Harness};
use fundchain_core::exec::TxContext;
use fundchain_core::{apply_tx, Address, Amount, ExecStatus, GenesisConfig, TxPayload, WorldState};

#[derive(Debug, Clone, Copy)]
enum Op {
    Grant { caller: usize, target: usize },
    Revoke { caller: usize, target: usize },
    Withdraw { caller: usize },
}

fn alphabet() -> Vec<Op> {
    let mut ops = Vec::new();
    for caller in 0..3 {
        for target in 0..3 {
            ops.push(Op::Grant { caller, target });
            ops.push(Op::Revoke { caller, target });
        }
        ops.push(Op::Withdraw { caller });
    }
    ops
}

/// Principal 0 is the deployer. Tracks the authorized set and the balance.
#[derive(Clone)]
struct Oracle {
    authorized: BTreeSet<usize>,
    balance: u128,
}

impl Oracle {
    fn step(&mut self, op: Op) -> ExecStatus {
        match op {
            Op::Grant { caller, target } => {
                if caller != 0 {
                    ExecStatus::NotOwner
                } else if target == 0 {
                    ExecStatus::GranteeIsOwner
                } else {
                    self.authorized.insert(target);
                    ExecStatus::Success
                }
            }
            Op::Revoke { caller, target } => {
                if caller != 0 {
                    ExecStatus::NotOwner
                } else if target == 0 {
                    ExecStatus::CannotRevokeDeployer
                } else if self.authorized.remove(&target) {
                    ExecStatus::Success
                } else {
                    ExecStatus::TargetNotAuthorized
                }
            }
            Op::Withdraw { caller } => {
                if caller == 0 || self.authorized.contains(&caller) {
                    self.balance = 0;
                    ExecStatus::Success
                } else {
                    ExecStatus::UnauthorizedWithdrawer
                }
            }
        }
    }
}

struct World {
    genesis: GenesisConfig,
    principals: Vec<Address>,
    contract: Address,
    /// `txs[op][nonce]`, signed ahead of time.
    txs: Vec<Vec<fundchain_core::SignedTransaction>>,
}

const MAX_LEN: usize = 5;

fn setup() -> (World, WorldState, u128) {
    let ks = keys(3);
    let mut h = Harness::new(genesis_for(&ks, 2));
    let contract = h.deploy(&ks[0]);
    let fund = h.exec(
        &ks[1],
        TxPayload::Fund {
            contract,
            amount: Amount::new(25_106_073_159_097_186),
            declared_fiat: None,
        },
    );
    assert!(fund.status.is_success());
    let state = h.ledger.state().clone();
    let base_nonce = [0, 1, 2].map(|i| state.nonce(&ks[i].address()));
    let txs = alphabet()
        .into_iter()
        .map(|op| {
            let (caller, payload) = match op {
                Op::Grant { caller, target } => (
                    caller,
                    TxPayload::Grant {
                        contract,
                        grantee: ks[target].address(),
                    },
                ),
                Op::Revoke { caller, target } => (
                    caller,
                    TxPayload::Revoke {
                        contract,
                        target: ks[target].address(),
                    },
                ),
                Op::Withdraw { caller } => (caller, TxPayload::Withdraw { contract }),
            };
            (0..MAX_LEN as u64)
                .map(|k| signed(&ks[caller], base_nonce[caller] + k, payload.clone()))
                .collect()
        })
        .collect();
    let world = World {
        genesis: h.ledger.genesis().clone(),
        principals: ks.iter().map(|k| k.address()).collect(),
        contract,
        txs,
    };
    (world, state, 25_106_073_159_097_186)
}

fn caller_of(op: Op) -> usize {
    match op {
        Op::Grant { caller, .. } | Op::Revoke { caller, .. } | Op::Withdraw { caller } => caller,
    }
}

struct Search<'a> {
    world: &'a World,
    ops: Vec<Op>,
    sequences: u64,
    discrepancies: Vec<String>,
}

impl Search<'_> {
    fn dfs(&mut self, state: &WorldState, oracle: &Oracle, sent: [u64; 3], path: &mut Vec<usize>) {
        self.sequences += 1;
        if path.len() == MAX_LEN {
            return;
        }
        for i in 0..self.ops.len() {
            let op = self.ops[i];
            let caller = caller_of(op);
            let tx = &self.world.txs[i][sent[caller] as usize];
            let mut next = state.clone();
            let ctx = TxContext {
                height: 1,
                index: path.len() as u32,
                proposer: Address([0xee; 20]),
            };
            let outcome = apply_tx(&mut next, &self.world.genesis, tx, ctx).expect("envelope ok");
            let mut o = oracle.clone();
            let expected = o.step(op);
            path.push(i);
            let c = next.contract(&self.world.contract).unwrap();
            let authorized: BTreeSet<usize> = (0..3)
                .filter(|&p| c.authorized.contains(&self.world.principals[p]))
                .collect();
            let can: Vec<bool> = (0..3)
                .map(|p| c.can_withdraw(&self.world.principals[p]))
                .collect();
            let oracle_can: Vec<bool> = (0..3)
                .map(|p| p == 0 || o.authorized.contains(&p))
                .collect();
            if outcome.status != expected
                || authorized != o.authorized
                || c.balance.value() != o.balance
                || can != oracle_can
                || c.deployer_owner != self.world.principals[0]
            {
                self.discrepancies.push(format!(
                    "{:?}: got {:?}, expected {:?}",
                    path.iter().map(|&j| self.ops[j]).collect::<Vec<_>>(),
                    outcome.status,
                    expected
                ));
            }
            let mut sent2 = sent;
            sent2[caller] += 1;
            self.dfs(&next, &o, sent2, path);
            path.pop();
        }
    }
}

#[test]
fn brute_force_matches_set_oracle() {
    let (world, state, funded) = setup();
    let oracle = Oracle {
        authorized: BTreeSet::new(),
        balance: funded,
    };
    let mut search = Search {
        world: &world,
        ops: alphabet(),
        sequences: 0,
        discrepancies: vec![],
    };
    search.dfs(&state, &oracle, [0; 3], &mut vec![]);
    // Σ_{k=0..5} 21^k sequences, the empty one included.
    assert_eq!(search.sequences, (0..=5).map(|k| 21u64.pow(k)).sum::<u64>());
    assert!(
        search.discrepancies.is_empty(),
        "{} discrepancies, first: {}",
        search.discrepancies.len(),
        search.discrepancies[0]
    );
}
